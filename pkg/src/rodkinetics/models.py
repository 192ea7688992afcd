"""Split-step solvers for the three kinetic rod models and the chemoattractant.

Every stepper is a Strang composition

    stiff-space(dt/2) . local(dt) . stiff-space(dt/2)

where the spatial piece is exact in Fourier space (free transport for the
reversal models, uni-directional diffusion for the diffusive ones) and the
local piece is itself split as exact theta-diffusion/reversal for dt/2, a
Heun step of the explicit conservative fluxes (alignment, chemotaxis), then
the exact theta part again.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import ConfigError, GridMismatchError, NumericalFailure, ParameterError
from .grid import GridSpec, KineticField, ScalarField
from .interaction import AlignmentSpec, alignment_rate_values

MODELS = ("I", "I-scaled", "II", "II-regularized", "III")
CHEMO_MODES = ("given", "coupled")


@dataclass(frozen=True)
class Toggles:
    transport: bool = True
    alignment: bool = True
    theta_diffusion: bool = True
    reversal: bool = True
    x_diffusion: bool = True
    chemotaxis: bool = True

    @classmethod
    def only(cls, *names: str) -> "Toggles":
        off = {k: False for k in cls.__dataclass_fields__}
        for name in names:
            if name not in off:
                raise ParameterError(f"unknown toggle {name!r}")
            off[name] = True
        return cls(**off)


@dataclass(frozen=True)
class ModelParams:
    """Model selector and coefficients. All physical coefficients are 1 except
    ``uni_diffusion``, the prefactor of div(e e^T grad f) in models II/III."""

    model: str = "I"
    alignment: AlignmentSpec = field(default_factory=AlignmentSpec)
    eps_scale: float = 1.0
    eps_reg: float = 0.0
    uni_diffusion: float = 1.0
    toggles: Toggles = field(default_factory=Toggles)
    dt: float = 1e-3
    chemo: str = "given"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"unknown model {self.model!r}")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt!r}")
        if not self.eps_scale > 0:
            raise ParameterError(f"eps_scale must be positive, got {self.eps_scale!r}")
        if self.model == "I-scaled" and self.eps_scale > 1:
            raise ParameterError(f"eps_scale must lie in (0, 1], got {self.eps_scale!r}")
        if not self.eps_reg >= 0:
            raise ParameterError(f"eps_reg must be nonnegative, got {self.eps_reg!r}")
        if not self.uni_diffusion >= 0:
            raise ParameterError("uni_diffusion must be nonnegative")
        if self.chemo not in CHEMO_MODES:
            raise ParameterError(f"unknown chemotaxis coupling {self.chemo!r}")

    @property
    def has_transport(self) -> bool:
        return self.model in ("I", "I-scaled")

    @property
    def needs_signal(self) -> bool:
        return self.model == "III" and self.toggles.chemotaxis


@dataclass(frozen=True, eq=False)
class SimState:
    f: KineticField
    s: Optional[ScalarField] = None

    @property
    def t(self) -> float:
        return self.f.time

    @property
    def grid(self) -> GridSpec:
        return self.f.grid


class _Stepper:
    """Precomputed Fourier multipliers for one (grid, params) pair."""

    def __init__(self, grid: GridSpec, params: ModelParams):
        self.grid = grid
        self.params = params
        tg = params.toggles
        dt = params.dt
        half = 0.5 * dt
        cos_t = grid.cos_theta[None, None, :]
        sin_t = grid.sin_theta[None, None, :]

        self.space_mult = None
        if params.has_transport:
            if tg.transport:
                scale = 1.0 if params.model == "I" else params.eps_scale
                kx, ky = grid.spatial_wavenumbers(odd=True)
                kdote = kx[..., None] * cos_t + ky[..., None] * sin_t
                self.space_mult = np.exp(-1j * kdote * (half / scale))
        elif tg.x_diffusion:
            kx, ky = grid.spatial_wavenumbers()
            kdote = kx[..., None] * cos_t + ky[..., None] * sin_t
            rate = params.uni_diffusion * kdote**2
            if params.model == "II-regularized":
                rate = rate + params.eps_reg * (kx**2 + ky**2)[..., None]
            self.space_mult = np.exp(-rate * half)

        m = grid.theta_modes
        rate = np.zeros_like(m)
        if tg.theta_diffusion:
            rate = rate + m**2
        if params.has_transport and tg.reversal:
            # (-f + tau_pi f) multiplies mode m by (-1)^m - 1
            rev = 1.0 if params.model == "I" else 1.0 / params.eps_scale**2
            rate = rate + rev * (1.0 - (-1.0) ** m)
        self.theta_mult = np.exp(-rate * half) if np.any(rate) else None

        self.align = tg.alignment
        self.chemo = params.needs_signal
        if self.align:
            keep = m <= grid.ntheta / 3.0
            keep[-1] = False
            self.dtheta_mult = np.where(keep, 1j * m, 0.0)
        if self.chemo:
            kx, ky = grid.spatial_wavenumbers(odd=True)
            self.ikx = (1j * kx)[..., None]
            self.iky = (1j * ky)[..., None]
            self.ikx2 = 1j * kx
            self.iky2 = 1j * ky
            self.cos_t = cos_t
            self.sin_t = sin_t
        if params.model == "III" and params.chemo == "coupled":
            kx, ky = grid.spatial_wavenumbers()
            self.chemo_rate = kx**2 + ky**2 + 1.0

    # -- sub-flows ------------------------------------------------------
    def space_half(self, u: np.ndarray) -> np.ndarray:
        if self.space_mult is None:
            return u
        g = self.grid
        U = np.fft.rfftn(u, axes=(0, 1))
        U *= self.space_mult
        return np.fft.irfftn(U, s=(g.nx, g.ny), axes=(0, 1))

    def theta_half(self, u: np.ndarray) -> np.ndarray:
        if self.theta_mult is None:
            return u
        U = np.fft.rfft(u, axis=2)
        U *= self.theta_mult
        return np.fft.irfft(U, n=self.grid.ntheta, axis=2)

    def signal_gradient(self, s: np.ndarray):
        S = np.fft.rfft2(s)
        n = self.grid.xshape
        return (
            np.fft.irfft2(S * self.ikx2, s=n),
            np.fft.irfft2(S * self.iky2, s=n),
        )

    def explicit_rhs(self, u: np.ndarray, grad_s) -> np.ndarray:
        g = self.grid
        out = np.zeros_like(u)
        if self.align:
            flux = u * alignment_rate_values(u, g, self.params.alignment)
            F = np.fft.rfft(flux, axis=2) * self.dtheta_mult
            out -= np.fft.irfft(F, n=g.ntheta, axis=2)
        if self.chemo:
            sx, sy = grad_s
            drift = 2.0 * (sx[..., None] * self.cos_t + sy[..., None] * self.sin_t) * u
            Fx = np.fft.rfftn(drift * self.cos_t, axes=(0, 1))
            Fy = np.fft.rfftn(drift * self.sin_t, axes=(0, 1))
            out -= np.fft.irfftn(self.ikx * Fx + self.iky * Fy, s=g.xshape, axes=(0, 1))
        return out

    def local(self, u: np.ndarray, s: Optional[np.ndarray]) -> np.ndarray:
        u = self.theta_half(u)
        if self.align or self.chemo:
            grad_s = self.signal_gradient(s) if self.chemo else None
            dt = self.params.dt
            k1 = self.explicit_rhs(u, grad_s)
            k2 = self.explicit_rhs(u + dt * k1, grad_s)
            u = u + (0.5 * dt) * (k1 + k2)
        return self.theta_half(u)

    def chemo_step(self, s: np.ndarray, n: np.ndarray, dt: float) -> np.ndarray:
        decay = np.exp(-self.chemo_rate * dt)
        S = decay * np.fft.rfft2(s) + (1.0 - decay) / self.chemo_rate * np.fft.rfft2(n)
        return np.fft.irfft2(S, s=self.grid.xshape)

    def __call__(self, u: np.ndarray, s: Optional[np.ndarray]):
        u = self.space_half(u)
        if self.params.model == "III" and self.params.chemo == "coupled":
            n = u.sum(axis=2) * self.grid.dtheta
            s = self.chemo_step(s, n, self.params.dt)
        u = self.local(u, s)
        u = self.space_half(u)
        return u, s


@lru_cache(maxsize=16)
def _stepper(grid: GridSpec, params: ModelParams) -> _Stepper:
    return _Stepper(grid, params)


def _check_state(state: SimState, params: ModelParams):
    if params.needs_signal or (params.model == "III" and params.chemo == "coupled"):
        if state.s is None:
            raise ConfigError("model III requires a chemoattractant field s")
        if state.s.grid.xshape != state.grid.xshape:
            raise GridMismatchError("chemoattractant grid does not match kinetic grid")


def _advance(state: SimState, params: ModelParams) -> SimState:
    _check_state(state, params)
    stepper = _stepper(state.grid, params)
    s_vals = None if state.s is None else state.s.values
    u, s_new = stepper(state.f.values, s_vals)
    t = state.t + params.dt
    if not np.all(np.isfinite(u)):
        raise NumericalFailure("non-finite values after explicit substep (reduce dt)", t)
    s_field = state.s
    if s_new is not None and s_new is not s_vals:
        s_field = ScalarField(state.grid, s_new, t)
    return SimState(KineticField(state.grid, u, t), s_field)


def _require(params: ModelParams, allowed: tuple[str, ...]):
    if params.model not in allowed:
        raise ParameterError(f"stepper expects model in {allowed}, got {params.model!r}")


def step_model1(state: SimState, params: ModelParams) -> SimState:
    _require(params, ("I",))
    return _advance(state, params)


def step_model1_scaled(state: SimState, params: ModelParams) -> SimState:
    _require(params, ("I-scaled",))
    return _advance(state, params)


def step_model2(state: SimState, params: ModelParams) -> SimState:
    _require(params, ("II", "II-regularized"))
    return _advance(state, params)


def step_model3(state: SimState, params: ModelParams) -> SimState:
    _require(params, ("III",))
    return _advance(state, params)


STEPPERS = {
    "I": step_model1,
    "I-scaled": step_model1_scaled,
    "II": step_model2,
    "II-regularized": step_model2,
    "III": step_model3,
}


def step(state: SimState, params: ModelParams) -> SimState:
    return STEPPERS[params.model](state, params)


def step_chemo(s: ScalarField, n: ScalarField, dt: float) -> ScalarField:
    """Exponential-integrator step of  s_t - Laplace s = n - s  with n frozen."""
    if s.grid.xshape != n.grid.xshape:
        raise GridMismatchError("s and n live on different x-grids")
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    kx, ky = s.grid.spatial_wavenumbers()
    rate = kx**2 + ky**2 + 1.0
    decay = np.exp(-rate * dt)
    S = decay * np.fft.rfft2(s.values) + (1.0 - decay) / rate * np.fft.rfft2(n.values)
    return ScalarField(s.grid, np.fft.irfft2(S, s=s.grid.xshape), s.time + dt)


Observer = Callable[[SimState], object]


def run(
    initial: SimState,
    params: ModelParams,
    t_end: float,
    observers: Optional[Mapping[str, Observer]] = None,
    cadence: int = 1,
):
    """Step ``initial`` to ``t_end``; call observers every ``cadence`` steps.

    Returns ``(final_state, records)`` where ``records`` maps ``"t"`` and each
    observer name to the list of values sampled at ticks (including t0).
    """
    if cadence < 1:
        raise ParameterError("observer cadence must be a positive number of steps")
    span = t_end - initial.t
    n_steps = int(round(span / params.dt))
    if n_steps < 0 or abs(n_steps * params.dt - span) > 1e-9 * max(1.0, abs(t_end)):
        raise ParameterError(f"t_end - t0 = {span!r} is not a nonnegative multiple of dt")
    observers = dict(observers or {})
    records: dict[str, list] = {"t": []}
    for name in observers:
        records[name] = []

    def observe(state):
        records["t"].append(state.t)
        for name, obs in observers.items():
            records[name].append(obs(state))

    step_fn = STEPPERS[params.model]
    state = initial
    observe(state)
    for k in range(1, n_steps + 1):
        try:
            state = step_fn(state, params)
        except NumericalFailure as exc:
            if exc.time is None:
                raise NumericalFailure(str(exc), state.t + params.dt) from exc
            raise
        if k % cadence == 0:
            observe(state)
    return state, records


def with_dt(params: ModelParams, dt: float) -> ModelParams:
    return replace(params, dt=dt)
