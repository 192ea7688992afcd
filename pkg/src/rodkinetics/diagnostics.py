"""Conservation, energy, symmetry and moment-regularity diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import GridMismatchError, ParameterError
from .grid import (
    GridSpec,
    KineticField,
    ScalarField,
    ThetaWeight,
    derivative_values,
    sample_theta_weight,
    shift_pi_values,
    theta_moment,
)
from .interaction import double_angle_moments

REVERSAL_LAYOUT = ("I", "I-scaled")
DIFFUSIVE_LAYOUT = ("II", "II-regularized", "III")


def total_mass(f: KineticField) -> float:
    return float(f.values.sum() * f.grid.cell_volume)


def l2_norm_sq(values: np.ndarray, grid: GridSpec) -> float:
    return float(np.sum(values * values) * grid.cell_volume)


def l2_distance(f: KineticField, g: KineticField) -> float:
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")
    return math.sqrt(l2_norm_sq(f.values - g.values, f.grid))


def nematic_symmetry_error(f: KineticField) -> float:
    """L2 norm of f - tau_pi f."""
    return math.sqrt(l2_norm_sq(f.values - shift_pi_values(f.values), f.grid))


def nematic_order(f: KineticField) -> ScalarField:
    """|int f e^{2i theta}| / int f, set to 0 where the theta-mass vanishes."""
    S, C = double_angle_moments(f.values, f.grid)
    n = f.values.sum(axis=2) * f.grid.dtheta
    with np.errstate(invalid="ignore", divide="ignore"):
        order = np.where(n > 0, np.hypot(S, C) / n, 0.0)
    return ScalarField(f.grid, order, f.time)


def weak_pairings(f: KineticField, bank: Sequence[np.ndarray]) -> np.ndarray:
    """Inner products <f, w> for a fixed bank of test functions on the grid."""
    return np.array([np.sum(f.values * w) * f.grid.cell_volume for w in bank])


def _dissipation_terms(values: np.ndarray, grid: GridSpec, layout: str, eps_reg: float) -> dict:
    terms = {"dtheta": l2_norm_sq(derivative_values(values, 2, 1, 2 * np.pi), grid)}
    if layout == "reversal":
        terms["reversal"] = l2_norm_sq(values - shift_pi_values(values), grid)
    else:
        fx = derivative_values(values, 0, 1, 1.0)
        fy = derivative_values(values, 1, 1, 1.0)
        directional = fx * grid.cos_theta + fy * grid.sin_theta
        terms["directional"] = l2_norm_sq(directional, grid)
        terms["reg"] = eps_reg * (l2_norm_sq(fx, grid) + l2_norm_sq(fy, grid))
    return terms


@dataclass
class EnergyLedger:
    """Running discrete form of the L2 energy inequality.

    ``lhs[k] = sup_{s <= t_k} ||f||^2 + sum of cumulative dissipation integrals``
    and ``bound[k] = 2 exp(t_k - t_0) ||f_0||^2``. Time integrals use the
    trapezoid rule at the update cadence.
    """

    model: str
    grid: GridSpec
    eps_reg: float = 0.0
    times: list = field(default_factory=list)
    l2_sq: list = field(default_factory=list)
    dtheta_sq_cum: list = field(default_factory=list)
    reversal_sq_cum: list = field(default_factory=list)
    directional_sq_cum: list = field(default_factory=list)
    reg_sq_cum: list = field(default_factory=list)
    lhs: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    _last: dict = field(default_factory=dict, repr=False)
    _sup: float = field(default=0.0, repr=False)

    @property
    def layout(self) -> str:
        return "reversal" if self.model in REVERSAL_LAYOUT else "diffusive"

    @property
    def columns(self) -> list[str]:
        base = ["t", "l2_sq", "dtheta_sq_cum"]
        if self.layout == "reversal":
            base.append("reversal_sq_cum")
        else:
            base += ["directional_sq_cum", "reg_sq_cum"]
        return base + ["lhs", "bound"]

    def rows(self):
        cols = {
            "t": self.times,
            "l2_sq": self.l2_sq,
            "dtheta_sq_cum": self.dtheta_sq_cum,
            "reversal_sq_cum": self.reversal_sq_cum,
            "directional_sq_cum": self.directional_sq_cum,
            "reg_sq_cum": self.reg_sq_cum,
            "lhs": self.lhs,
            "bound": self.bound,
        }
        names = self.columns
        return [[cols[c][k] for c in names] for k in range(len(self.times))]

    @classmethod
    def start(cls, f0: KineticField, model: str, eps_reg: float = 0.0) -> "EnergyLedger":
        if model not in REVERSAL_LAYOUT + DIFFUSIVE_LAYOUT:
            raise ParameterError(f"unknown model {model!r}")
        ledger = cls(model=model, grid=f0.grid, eps_reg=eps_reg if model == "II-regularized" else 0.0)
        e0 = l2_norm_sq(f0.values, f0.grid)
        ledger._last = _dissipation_terms(f0.values, f0.grid, ledger.layout, ledger.eps_reg)
        ledger._sup = e0
        ledger.times.append(f0.time)
        ledger.l2_sq.append(e0)
        ledger.dtheta_sq_cum.append(0.0)
        if ledger.layout == "reversal":
            ledger.reversal_sq_cum.append(0.0)
        else:
            ledger.directional_sq_cum.append(0.0)
            ledger.reg_sq_cum.append(0.0)
        ledger.lhs.append(e0)
        ledger.bound.append(2.0 * e0)
        return ledger

    @property
    def initial_energy(self) -> float:
        return self.l2_sq[0]


def energy_ledger_update(ledger: EnergyLedger, f: KineticField, model: str, dt: float) -> EnergyLedger:
    """Append one tick ``dt`` after the previous; returns the same ledger."""
    if model != ledger.model:
        raise ParameterError(f"ledger built for model {ledger.model!r}, got {model!r}")
    if f.grid != ledger.grid:
        raise GridMismatchError("field grid does not match ledger grid")
    if not dt > 0:
        raise ParameterError("ledger tick must be positive")
    terms = _dissipation_terms(f.values, f.grid, ledger.layout, ledger.eps_reg)
    prev = ledger._last

    def accumulate(series, key):
        series.append(series[-1] + 0.5 * dt * (prev[key] + terms[key]))
        return series[-1]

    e = l2_norm_sq(f.values, f.grid)
    ledger._sup = max(ledger._sup, e)
    total = ledger._sup + accumulate(ledger.dtheta_sq_cum, "dtheta")
    if ledger.layout == "reversal":
        total += accumulate(ledger.reversal_sq_cum, "reversal")
    else:
        total += accumulate(ledger.directional_sq_cum, "directional")
        total += accumulate(ledger.reg_sq_cum, "reg")
    t = ledger.times[-1] + dt
    ledger.times.append(t)
    ledger.l2_sq.append(e)
    ledger.lhs.append(total)
    ledger.bound.append(2.0 * math.exp(t - ledger.times[0]) * ledger.initial_energy)
    ledger._last = terms
    return ledger


# -- moment windows and the fractional space-time norm ---------------------


def time_taper(times: np.ndarray, fraction: float = 0.1) -> np.ndarray:
    """Cosine ramp 0 -> 1 over the first and last ``fraction`` of the window."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return np.ones_like(times)
    s = (times - times[0]) / (times[-1] - times[0])
    ramp = np.ones_like(s)
    if fraction > 0:
        lo = s < fraction
        hi = s > 1 - fraction
        ramp[lo] = 0.5 * (1 - np.cos(np.pi * s[lo] / fraction))
        ramp[hi] = 0.5 * (1 - np.cos(np.pi * (1 - s[hi]) / fraction))
    return ramp


def _check_uniform(times: np.ndarray) -> float:
    if times.size < 2:
        raise ParameterError("moment window needs at least two samples")
    steps = np.diff(times)
    dt = steps.mean()
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, abs(times[-1])):
        raise ParameterError("moment window samples are not on a uniform cadence")
    return float(dt)


@dataclass(frozen=True, eq=False)
class MomentWindow:
    grid: GridSpec
    times: np.ndarray
    rho: np.ndarray  # (K, nx, ny)
    psi: np.ndarray  # broadcastable to rho

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        if rho.shape != (times.size,) + self.grid.xshape:
            raise GridMismatchError(f"rho shape {rho.shape} does not match window")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rho", rho)
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim == 1:
            psi = psi[:, None, None]
        object.__setattr__(self, "psi", np.broadcast_to(psi, rho.shape))

    @property
    def dt(self) -> float:
        return _check_uniform(self.times)

    @property
    def weighted(self) -> np.ndarray:
        return self.psi * self.rho


def moment_window_collect(
    grid: GridSpec, times: Sequence[float], rhos: Sequence[np.ndarray], taper: float = 0.1
) -> MomentWindow:
    times = np.asarray(times, dtype=float)
    _check_uniform(times)
    return MomentWindow(grid, times, np.stack([np.asarray(r) for r in rhos]), time_taper(times, taper))


class MomentCollector:
    """Observer that samples the theta-moment of f against ``phi`` each tick."""

    def __init__(self, phi: ThetaWeight, taper: float = 0.1):
        self.phi = phi
        self.taper = taper
        self.times: list[float] = []
        self.rhos: list[np.ndarray] = []
        self.grid: Optional[GridSpec] = None

    def __call__(self, state) -> float:
        f = state.f
        if self.grid is None:
            self.grid = f.grid
            self._w = sample_theta_weight(f.grid, self.phi)
        self.times.append(f.time)
        rho = theta_moment(f.values, self._w, f.grid.dtheta)
        self.rhos.append(rho)
        return float(rho.mean())

    def window(self) -> MomentWindow:
        if self.grid is None:
            raise ParameterError("collector has no samples")
        return moment_window_collect(self.grid, self.times, self.rhos, self.taper)


def fractional_norm(window: MomentWindow, exponent: float = 1.0 / 7.0) -> float:
    """Squared space-time norm  sum (1 + (tau^2 + |xi|^4)^p) |FT(psi rho)|^2.

    Fourier coefficients are normalized so that ``exponent=0`` (which drops
    the frequency weight entirely) returns the plain L2 norm squared of
    psi*rho over the window, by Parseval.
    """
    dt = window.dt
    g = window.grid
    data = window.weighted
    K = data.shape[0]
    G = np.fft.fftn(data)
    power = (G.real**2 + G.imag**2) * (g.cell_area * dt / data.size)
    if exponent == 0:
        return float(power.sum())
    tau = 2 * np.pi * np.fft.fftfreq(K, d=dt)[:, None, None]
    xi1 = 2 * np.pi * np.fft.fftfreq(g.nx, d=1.0 / g.nx)[None, :, None]
    xi2 = 2 * np.pi * np.fft.fftfreq(g.ny, d=1.0 / g.ny)[None, None, :]
    weight = 1.0 + (tau**2 + (xi1**2 + xi2**2) ** 2) ** exponent
    return float(np.sum(weight * power))
