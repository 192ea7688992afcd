"""Self-propelled rods on the unit torus with clamped nematic alignment.

Per step every agent feels the alignment torque of its neighbours within
distance ``r`` (minimum-image), a uniform angular kick of variance
``sigma**2 * dt`` and a reversal theta -> theta + pi with probability
``1 - exp(-lam * dt)``; positions advance with the pre-step heading. All
random draws come from the counter-based generator in :mod:`rng`, keyed by
agent index and step number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import rng
from .errors import ParameterError
from .grid import GridSpec, KineticField

# largest minimum-image distance on the unit torus
MAX_IMAGE_DISTANCE = math.sqrt(0.5)

_LANE_NOISE = 0
_LANE_REVERSAL = 1
_INIT_COUNTER = 2**63


@dataclass(frozen=True)
class AgentParams:
    N: int = 1000
    v0: float = 1.0
    gamma: float = 1.0
    sigma: float = 1.0
    lam: float = 1.0
    r: float = 0.05
    l: float = 0.05
    w: float = 0.005
    form: str = "sum"

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N!r}")
        for name in ("v0", "gamma", "sigma", "lam"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be nonnegative")
        for name in ("r", "l", "w"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.form not in ("sum", "current"):
            raise ParameterError(f"unknown alignment form {self.form!r}")

    @property
    def clamp_bound(self) -> float:
        """pi r^2 / (l w): at most this many non-overlapping cells fit in the disk."""
        return math.pi * self.r**2 / (self.l * self.w)

    @property
    def all_to_all(self) -> bool:
        return self.r > MAX_IMAGE_DISTANCE


@dataclass(frozen=True, eq=False)
class AgentEnsemble:
    X: np.ndarray
    theta: np.ndarray
    t: float
    seed: int
    counter: int = 0
    reversals: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return self.theta.size


def wrap_angle(theta: np.ndarray) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    return theta - 2 * np.pi * np.ceil((theta - np.pi) / (2 * np.pi))


def wrap_position(X: np.ndarray) -> np.ndarray:
    X = np.mod(X, 1.0)
    X[X >= 1.0] -= 1.0
    return X


def sample_angles(density: Callable[[np.ndarray], np.ndarray], N: int, seed: int) -> np.ndarray:
    """Rejection-sample N angles from an (unnormalized) density on (-pi, pi]."""
    ids = np.arange(N, dtype=np.uint64)
    probe = np.linspace(-np.pi, np.pi, 4097)
    ceiling = 1.05 * float(np.max(density(probe)))
    out = np.empty(N)
    pending = np.arange(N)
    lane = 2
    while pending.size:
        u1 = rng.uniform(seed, ids[pending], _INIT_COUNTER, lane)
        u2 = rng.uniform(seed, ids[pending], _INIT_COUNTER, lane + 1)
        cand = np.pi - 2 * np.pi * u1  # in (-pi, pi]
        ok = u2 * ceiling < density(cand)
        out[pending[ok]] = cand[ok]
        pending = pending[~ok]
        lane += 2
        if lane > 20000:
            raise ParameterError("angle sampler failed to converge")
    return out


def init_ensemble(
    params: AgentParams,
    seed: int,
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    t: float = 0.0,
) -> AgentEnsemble:
    """Uniform positions; angles uniform or drawn from ``density``."""
    ids = np.arange(params.N, dtype=np.uint64)
    X = np.stack(
        [rng.uniform(seed, ids, _INIT_COUNTER, 0), rng.uniform(seed, ids, _INIT_COUNTER, 1)],
        axis=1,
    )
    if density is None:
        theta = np.pi - 2 * np.pi * rng.uniform(seed, ids, _INIT_COUNTER, 2)
    else:
        theta = sample_angles(density, params.N, seed)
    return AgentEnsemble(X, theta, t, seed, 0, np.zeros(params.N, dtype=np.int64))


def _min_image(d: np.ndarray) -> np.ndarray:
    return d - np.round(d)


def _directed_pairs(X: np.ndarray, r: float):
    """All ordered pairs (i, j), i != j, with minimum-image distance < r."""
    n = X.shape[0]
    ncell = int(1.0 / r)
    if ncell < 3:
        ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    else:
        c = np.minimum((X * ncell).astype(np.int64), ncell - 1)
        cell = c[:, 0] * ncell + c[:, 1]
        order = np.argsort(cell, kind="stable")
        counts = np.bincount(cell, minlength=ncell * ncell)
        starts = np.cumsum(counts) - counts
        idx = np.arange(n)
        i_parts, j_parts = [], []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                nb = ((c[:, 0] + dx) % ncell) * ncell + (c[:, 1] + dy) % ncell
                cnt = counts[nb]
                total = int(cnt.sum())
                if total == 0:
                    continue
                i_rep = np.repeat(idx, cnt)
                offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
                j_rep = order[np.repeat(starts[nb], cnt) + offs]
                i_parts.append(i_rep)
                j_parts.append(j_rep)
        ii = np.concatenate(i_parts)
        jj = np.concatenate(j_parts)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
    d = _min_image(X[jj] - X[ii])
    close = d[:, 0] ** 2 + d[:, 1] ** 2 < r * r
    return ii[close], jj[close]


def neighbor_sums(X: np.ndarray, theta: np.ndarray, r: float):
    """Per agent: sum_j sin(2(theta_j - theta_i)) and J_i = sum_j exp(2i theta_j), j != i."""
    n = theta.size
    if r > MAX_IMAGE_DISTANCE:
        z = np.exp(2j * theta)
        J = z.sum() - z
        return (np.conj(z) * J).imag, J
    ii, jj = _directed_pairs(X, r)
    s = np.bincount(ii, weights=np.sin(2 * (theta[jj] - theta[ii])), minlength=n)
    zj = np.exp(2j * theta[jj])
    J = np.bincount(ii, weights=zj.real, minlength=n) + 1j * np.bincount(ii, weights=zj.imag, minlength=n)
    return s, J


def alignment_torque(ens: AgentEnsemble, params: AgentParams) -> np.ndarray:
    if params.gamma == 0:
        return np.zeros(ens.N)
    a = params.clamp_bound
    s, J = neighbor_sums(ens.X, ens.theta, params.r)
    if params.form == "sum":
        return params.gamma * np.clip(s, -a, a)
    mag = np.abs(J)
    director = 0.5 * np.angle(J)
    rate = params.gamma * np.minimum(mag, a) * np.sin(2 * (director - ens.theta))
    return np.where(mag > 0, rate, 0.0)


def step_agents(ens: AgentEnsemble, params: AgentParams, dt: float) -> AgentEnsemble:
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    if params.lam * dt > 0.1 + 1e-12:
        raise ParameterError("reversal thinning requires lam * dt <= 0.1")
    if ens.N != params.N:
        raise ParameterError("ensemble size does not match params.N")
    ids = np.arange(ens.N, dtype=np.uint64)
    torque = alignment_torque(ens, params)
    theta = ens.theta + torque * dt
    if params.sigma > 0:
        half_width = math.sqrt(3.0 * dt) * params.sigma
        u = rng.uniform(ens.seed, ids, ens.counter, _LANE_NOISE)
        theta = theta + (2.0 * u - 1.0) * half_width
    flips = np.zeros(ens.N, dtype=bool)
    if params.lam > 0:
        u = rng.uniform(ens.seed, ids, ens.counter, _LANE_REVERSAL)
        flips = u < -math.expm1(-params.lam * dt)
        theta = theta + np.pi * flips
    heading = np.stack([np.cos(ens.theta), np.sin(ens.theta)], axis=1)
    X = wrap_position(ens.X + params.v0 * dt * heading)
    reversals = ens.reversals if ens.reversals is not None else np.zeros(ens.N, dtype=np.int64)
    return AgentEnsemble(
        X, wrap_angle(theta), ens.t + dt, ens.seed, ens.counter + 1, reversals + flips
    )


def run_agents(ens: AgentEnsemble, params: AgentParams, dt: float, t_end: float) -> AgentEnsemble:
    n_steps = int(round((t_end - ens.t) / dt))
    if n_steps < 0 or abs(n_steps * dt - (t_end - ens.t)) > 1e-9 * max(1.0, abs(t_end)):
        raise ParameterError("t_end - t is not a nonnegative multiple of dt")
    for _ in range(n_steps):
        ens = step_agents(ens, params, dt)
    return ens


def bin_indices(ens: AgentEnsemble, grid: GridSpec):
    """Node-centred cell indices (ix, iy, itheta) of every agent."""
    ix = np.floor(ens.X[:, 0] * grid.nx + 0.5).astype(np.int64) % grid.nx
    iy = np.floor(ens.X[:, 1] * grid.ny + 0.5).astype(np.int64) % grid.ny
    it = np.floor((ens.theta + np.pi) / grid.dtheta + 0.5).astype(np.int64) % grid.ntheta
    return ix, iy, it


def bin_density(ens: AgentEnsemble, grid: GridSpec) -> KineticField:
    """Empirical probability density: each agent adds 1/(N * cell volume) to its cell."""
    ix, iy, it = bin_indices(ens, grid)
    flat = (ix * grid.ny + iy) * grid.ntheta + it
    counts = np.bincount(flat, minlength=grid.nx * grid.ny * grid.ntheta)
    values = counts.reshape(grid.shape) / (ens.N * grid.cell_volume)
    return KineticField(grid, values, ens.t)


def theta_histogram(theta: np.ndarray, ntheta: int) -> np.ndarray:
    """Node-centred histogram of angles, normalized to unit integral over the circle."""
    h = 2 * np.pi / ntheta
    it = np.floor((theta + np.pi) / h + 0.5).astype(np.int64) % ntheta
    return np.bincount(it, minlength=ntheta) / (theta.size * h)


def with_size(params: AgentParams, N: int) -> AgentParams:
    return replace(params, N=N)
