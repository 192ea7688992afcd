"""Periodic tensor grids over the unit torus times the circle.

All fields live on uniform collocation nodes

    x1_i = i / nx,   x2_j = j / ny,   theta_l = -pi + 2 pi l / ntheta,

and are stored with shape ``(nx, ny, ntheta)`` (theta innermost). Spectral
operations use real FFTs; odd-order derivatives drop the Nyquist mode.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import GridMismatchError, ParameterError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    ntheta: int

    def __post_init__(self):
        for name in ("nx", "ny", "ntheta"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
                raise ParameterError(f"{name} must be an integer, got {n!r}")
            if n < 4 or n % 2:
                raise ParameterError(f"{name} must be even and >= 4, got {n}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.ntheta)

    @property
    def xshape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.ntheta

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dtheta

    @cached_property
    def x1(self) -> np.ndarray:
        return np.arange(self.nx) / self.nx

    @cached_property
    def x2(self) -> np.ndarray:
        return np.arange(self.ny) / self.ny

    @cached_property
    def theta(self) -> np.ndarray:
        return -np.pi + TWO_PI * np.arange(self.ntheta) / self.ntheta

    @cached_property
    def _trig(self) -> dict[str, np.ndarray]:
        # The second half of the theta nodes is the first half shifted by pi;
        # fill it by exact sign flips so tabulated harmonics respect the shift
        # bit for bit.
        h = self.ntheta // 2
        th = self.theta[:h]
        out = {}
        for key, vals, sign in (
            ("cos", np.cos(th), -1.0),
            ("sin", np.sin(th), -1.0),
            ("cos2", np.cos(2 * th), 1.0),
            ("sin2", np.sin(2 * th), 1.0),
        ):
            full = np.concatenate([vals, sign * vals])
            full.setflags(write=False)
            out[key] = full
        return out

    @property
    def cos_theta(self) -> np.ndarray:
        return self._trig["cos"]

    @property
    def sin_theta(self) -> np.ndarray:
        return self._trig["sin"]

    @property
    def cos2_theta(self) -> np.ndarray:
        return self._trig["cos2"]

    @property
    def sin2_theta(self) -> np.ndarray:
        return self._trig["sin2"]

    def mesh(self):
        """Broadcastable ``(x1, x2, theta)`` node arrays."""
        return (
            self.x1[:, None, None],
            self.x2[None, :, None],
            self.theta[None, None, :],
        )

    @cached_property
    def theta_modes(self) -> np.ndarray:
        """Integer theta wavenumbers in rfft layout."""
        return np.arange(self.ntheta // 2 + 1, dtype=float)

    def spatial_wavenumbers(self, odd: bool = False):
        """Wavenumbers for ``rfftn(..., axes=(0, 1))`` as broadcastable 2-D arrays.

        With ``odd=True`` the Nyquist entries are zeroed, the convention for
        first-order operators on real data.
        """
        kx = TWO_PI * np.fft.fftfreq(self.nx, d=1.0 / self.nx)
        ky = TWO_PI * np.fft.rfftfreq(self.ny, d=1.0 / self.ny)
        if odd:
            kx[self.nx // 2] = 0.0
            ky[-1] = 0.0
        return kx[:, None], ky[None, :]


@dataclass(frozen=True, eq=False)
class KineticField:
    """Discretized f(x, theta) at one time. ``values`` is a read-only copy."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ParameterError("kinetic field has non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, time: float | None = None) -> "KineticField":
        return KineticField(self.grid, values, self.time if time is None else time)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Discretized x-only function (density, chemoattractant)."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.xshape:
            raise GridMismatchError(
                f"values shape {vals.shape} does not match x-grid {self.grid.xshape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ParameterError("scalar field has non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


Field = Union[KineticField, ScalarField]
ThetaWeight = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def sample_theta_weight(grid: GridSpec, phi: ThetaWeight) -> np.ndarray:
    if callable(phi):
        phi = phi(grid.theta)
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 0:
        phi = np.full(grid.ntheta, float(phi))
    if phi.shape != (grid.ntheta,):
        raise GridMismatchError(
            f"theta weight has shape {phi.shape}, expected ({grid.ntheta},)"
        )
    return phi


def theta_moment(values: np.ndarray, phi: np.ndarray, dtheta: float) -> np.ndarray:
    return values @ phi * dtheta


def integrate_theta(f: KineticField, phi: ThetaWeight) -> ScalarField:
    """Rectangle-rule moment ``sum_l f(x, theta_l) phi(theta_l) dtheta``."""
    w = sample_theta_weight(f.grid, phi)
    return ScalarField(f.grid, theta_moment(f.values, w, f.grid.dtheta), f.time)


def shift_pi_values(values: np.ndarray) -> np.ndarray:
    return np.roll(values, -values.shape[-1] // 2, axis=-1)


def shift_pi(f: KineticField) -> KineticField:
    """Exact translation theta -> theta + pi (an index shift by ntheta/2)."""
    return f.with_values(shift_pi_values(f.values))


_AXES = {"x1": 0, "x2": 1, "theta": 2, 0: 0, 1: 1, 2: 2}


def derivative_values(values: np.ndarray, axis: int, order: int, period: float) -> np.ndarray:
    """Fourier collocation derivative of a real array along one periodic axis."""
    n = values.shape[axis]
    k = TWO_PI / period * np.fft.rfftfreq(n, d=1.0 / n)
    if order % 2:
        k[-1] = 0.0
    mult = (1j * k) ** order
    shape = [1] * values.ndim
    shape[axis] = k.size
    spec = np.fft.rfft(values, axis=axis) * mult.reshape(shape)
    return np.fft.irfft(spec, n=n, axis=axis)


def spectral_derivative(field: Field, axis, order: int = 1) -> Field:
    if order not in (1, 2):
        raise ParameterError(f"derivative order must be 1 or 2, got {order}")
    try:
        ax = _AXES[axis]
    except KeyError:
        raise ParameterError(f"unknown axis {axis!r}") from None
    if isinstance(field, ScalarField) and ax == 2:
        raise ParameterError("scalar fields have no theta axis")
    period = TWO_PI if ax == 2 else 1.0
    out = derivative_values(field.values, ax, order, period)
    return type(field)(field.grid, out, field.time)
