"""Nematic alignment rates: clamp, localized and disk-averaged rates, nematic current."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import j1

from .errors import ParameterError
from .grid import GridSpec, KineticField

FORMS = ("clamped-sum", "clamped-current")


def clamp(r, a: float):
    """Saturate ``r`` to the interval [-a, a]. Works on scalars and arrays."""
    if not a > 0:
        raise ParameterError(f"clamp bound must be positive, got {a!r}")
    if np.ndim(r) == 0:
        return -a if r < -a else (a if r > a else r)
    return np.clip(r, -a, a)


@dataclass(frozen=True)
class AlignmentSpec:
    """How the alignment rate is formed and bounded.

    ``radius = 0`` selects the localized rate; ``psi`` replaces the clamp
    with another bounded Lipschitz response (``clamped-sum`` form only).
    """

    form: str = "clamped-sum"
    bound: float = 1.0
    radius: float = 0.0
    kernel: str = "grid"
    psi: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.form not in FORMS:
            raise ParameterError(f"unknown alignment form {self.form!r}")
        if not self.bound > 0:
            raise ParameterError(f"alignment bound must be positive, got {self.bound!r}")
        if not 0 <= self.radius < 0.5:
            raise ParameterError(f"interaction radius must lie in [0, 1/2), got {self.radius!r}")
        if self.kernel not in ("grid", "analytic"):
            raise ParameterError(f"unknown disk kernel {self.kernel!r}")

    def response(self, v: np.ndarray) -> np.ndarray:
        if self.psi is not None:
            return self.psi(v)
        return np.clip(v, -self.bound, self.bound)


def double_angle_moments(values: np.ndarray, grid: GridSpec):
    """(S, C) = integrals of f against sin 2theta and cos 2theta."""
    S = values @ grid.sin2_theta * grid.dtheta
    C = values @ grid.cos2_theta * grid.dtheta
    return S, C


@lru_cache(maxsize=32)
def disk_kernel_hat(nx: int, ny: int, eps: float, kernel: str = "grid") -> np.ndarray:
    """rfft2 of the normalized indicator of the periodic disk ``|y| < eps``.

    The grid variant divides by the number of enclosed nodes, so the average
    of a constant is that constant exactly.
    """
    if kernel == "analytic":
        kx = 2 * np.pi * np.fft.fftfreq(nx, d=1.0 / nx)[:, None]
        ky = 2 * np.pi * np.fft.rfftfreq(ny, d=1.0 / ny)[None, :]
        z = np.hypot(kx, ky) * eps
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(z > 0, 2 * j1(z) / z, 1.0)
        return out
    ix = np.fft.fftfreq(nx, d=1.0 / nx)[:, None] / nx
    iy = np.fft.fftfreq(ny, d=1.0 / ny)[None, :] / ny
    ind = (ix**2 + iy**2 < eps**2).astype(float)
    ind /= ind.sum()
    return np.fft.rfft2(ind)


def disk_average(values2d: np.ndarray, eps: float, kernel: str = "grid") -> np.ndarray:
    nx, ny = values2d.shape
    khat = disk_kernel_hat(nx, ny, float(eps), kernel)
    return np.fft.irfft2(np.fft.rfft2(values2d) * khat, s=(nx, ny))


def rate_from_moments(S: np.ndarray, C: np.ndarray, grid: GridSpec) -> np.ndarray:
    # sin(2(t1 - t)) = sin 2t1 cos 2t - cos 2t1 sin 2t
    return S[..., None] * grid.cos2_theta - C[..., None] * grid.sin2_theta


def alignment_rate_values(values: np.ndarray, grid: GridSpec, spec: AlignmentSpec) -> np.ndarray:
    """Bounded alignment rate Psi(V) on the grid, ready to multiply f."""
    S, C = double_angle_moments(values, grid)
    if spec.radius > 0:
        S = disk_average(S, spec.radius, spec.kernel)
        C = disk_average(C, spec.radius, spec.kernel)
    v = rate_from_moments(S, C, grid)
    if spec.form == "clamped-sum":
        return spec.response(v)
    J = np.hypot(S, C)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(J > 0, np.minimum(J, spec.bound) / J, 0.0)
    return v * scale[..., None]


def local_rate(f: KineticField) -> KineticField:
    """v_f(x, theta) = int f(x, t1) sin(2(t1 - theta)) dt1."""
    S, C = double_angle_moments(f.values, f.grid)
    return f.with_values(rate_from_moments(S, C, f.grid))


def nonlocal_rate(f: KineticField, eps: float, kernel: str = "grid") -> KineticField:
    """Average of v_f over the periodic disk of radius ``eps`` around each x."""
    if not 0 < eps < 0.5:
        raise ParameterError(f"eps must lie in (0, 1/2), got {eps!r}")
    S, C = double_angle_moments(f.values, f.grid)
    S = disk_average(S, eps, kernel)
    C = disk_average(C, eps, kernel)
    return f.with_values(rate_from_moments(S, C, f.grid))


def nematic_current(angles: Sequence[float]) -> tuple[complex, Optional[float]]:
    """Nematic current J = sum exp(2i theta_j) and director 0.5 Arg J.

    The director is ``None`` when J vanishes (to round-off relative to the
    number of angles).
    """
    J = complex(sum(cmath.exp(2j * a) for a in angles))
    if abs(J) <= 1e-12 * max(1, len(angles)):
        return J, None
    d = 0.5 * cmath.phase(J)
    if d <= -math.pi / 2:
        d += math.pi
    return J, d


def director_form_rate(J: complex, director: float, theta: float, a: float, gamma: float) -> float:
    """gamma * clamp(|J|, a) * sin(2(director - theta))."""
    return gamma * clamp(abs(J), a) * math.sin(2.0 * (director - theta))
