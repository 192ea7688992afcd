"""Run drivers and the built-in limit studies.

Each study writes one field file per run into ``out_dir`` (when given) and
computes its table from those stored fields, so tables can be rebuilt from
the files alone.
"""
from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import agents as ag
from ..diagnostics import (
    EnergyLedger,
    MomentCollector,
    energy_ledger_update,
    fractional_norm,
    l2_distance,
    l2_norm_sq,
    nematic_order,
    nematic_symmetry_error,
    total_mass,
)
from ..errors import ConfigError
from ..grid import GridSpec, KineticField
from ..interaction import AlignmentSpec
from ..models import ModelParams, SimState, run
from .config import RunConfig
from .initial import cosine_signal, initial_field
from .io import Table, read_field, write_field, write_timeseries


def _steps_for(t_end: float, dt_max: float) -> tuple[int, float]:
    n = max(1, math.ceil(t_end / dt_max - 1e-9))
    return n, t_end / n


def _store(f: KineticField, out_dir: Optional[Path], name: str) -> KineticField:
    if out_dir is None:
        return f
    path = out_dir / name
    write_field(f, path)
    return read_field(path)


def _prepare(out_dir) -> Optional[Path]:
    if out_dir is None:
        return None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def initial_state(cfg: RunConfig, params: ModelParams) -> SimState:
    f0 = initial_field(cfg)
    s0 = None
    if params.model == "III":
        s0 = cosine_signal(cfg.grid, cfg.signal_amplitude)
    return SimState(f0, s0)


# -- single model runs -----------------------------------------------------


def run_model(cfg: RunConfig, out_dir=None) -> dict:
    """One kinetic run with conservation, symmetry and energy monitoring."""
    out = _prepare(out_dir)
    params = cfg.model_params()
    n, dt = _steps_for(cfg.t_end, cfg.dt)
    params = replace(params, dt=dt)
    state = initial_state(cfg, params)
    ledger = EnergyLedger.start(state.f, params.model, params.eps_reg)
    last_t = [state.t]

    def energy(st):
        if st.t > last_t[0]:
            energy_ledger_update(ledger, st.f, params.model, st.t - last_t[0])
            last_t[0] = st.t
        return ledger.lhs[-1]

    observers = {
        "mass": lambda st: total_mass(st.f),
        "symmetry_error": lambda st: nematic_symmetry_error(st.f),
        "min_f": lambda st: float(st.f.values.min()),
        "mean_order": lambda st: float(nematic_order(st.f).values.mean()),
        "energy_lhs": energy,
    }
    final, rec = run(state, params, cfg.t_end, observers, cadence=min(cfg.cadence, n))
    series = Table(["t"] + list(observers), zip(rec["t"], *(rec[k] for k in observers)))
    if out is not None:
        write_field(state.f, out / "initial.kinf")
        write_field(final.f, out / "final.kinf")
        write_timeseries(series, out / "timeseries.csv")
        write_timeseries(ledger, out / "energy.csv")
    return {"final": final, "series": series, "ledger": ledger}


def run_agent_model(cfg: RunConfig, out_dir=None) -> dict:
    out = _prepare(out_dir)
    params = cfg.agent_params()
    n, dt = _steps_for(cfg.t_end, cfg.agent_dt)
    ens = ag.init_ensemble(params, cfg.seed)
    rows = []

    def record(e):
        z = np.exp(2j * e.theta).mean()
        rows.append([e.t, float(e.reversals.mean()), float(abs(z))])

    record(ens)
    cadence = min(cfg.cadence, n)
    for k in range(1, n + 1):
        ens = ag.step_agents(ens, params, dt)
        if k % cadence == 0:
            record(ens)
    table = Table(["t", "mean_reversals", "nematic_order"], rows)
    density = ag.bin_density(ens, cfg.grid)
    if out is not None:
        write_timeseries(table, out / "agents.csv")
        write_field(density, out / "agents_density.kinf")
    return {"ensemble": ens, "series": table, "density": density}


# -- localization: V^eps -> v_f ---------------------------------------------


def observed_orders(hs: Sequence[float], errs: Sequence[float]) -> list:
    out = [""]
    for k in range(1, len(hs)):
        if errs[k] > 0 and errs[k - 1] > 0:
            out.append(math.log(errs[k - 1] / errs[k]) / math.log(hs[k - 1] / hs[k]))
        else:
            out.append("")
    return out


def study_localization(cfg: RunConfig, eps_list: Sequence[float], out_dir=None) -> Table:
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(not 0 < e < 0.5 for e in eps_list):
        raise ConfigError("eps_list entries must lie in (0, 1/2)", "eps_list")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError("eps_list must be strictly decreasing", "eps_list")
    out = _prepare(out_dir)
    base = cfg.model_params(model="I")
    n, dt = _steps_for(cfg.t_end, cfg.dt)
    base = replace(base, dt=dt)
    state = SimState(initial_field(cfg))

    def solve(radius, name):
        p = replace(base, alignment=replace(base.alignment, radius=radius))
        final, _ = run(state, p, cfg.t_end)
        return _store(final.f, out, name)

    ref = solve(0.0, "localization_ref.kinf")
    errs = [
        l2_distance(solve(e, f"localization_eps{i}.kinf"), ref) for i, e in enumerate(eps_list)
    ]
    if len(eps_list) == 1:
        return Table(["eps", "l2_error"], [[eps_list[0], errs[0]]])
    orders = observed_orders(eps_list, errs)
    numeric = [o for o in orders if o != ""]
    meta = {"min_order": min(numeric) if numeric else ""}
    return Table(["eps", "l2_error", "order"], zip(eps_list, errs, orders), meta)


# -- diffusion limit: scaled model I -> model II ------------------------------


def study_diffusion_limit(cfg: RunConfig, eps_list: Sequence[float], out_dir=None) -> Table:
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(not 0 < e <= 1 for e in eps_list):
        raise ConfigError("eps_list entries must lie in (0, 1]", "eps_list")
    out = _prepare(out_dir)
    f0 = initial_field(cfg)
    if nematic_symmetry_error(f0) > 1e-12 * math.sqrt(l2_norm_sq(f0.values, f0.grid)):
        raise ConfigError("diffusion-limit study needs an initial state with f(theta+pi) = f(theta)", "ic")
    state = SimState(f0)
    T = cfg.t_end
    toggles = cfg.toggles
    align = AlignmentSpec(cfg.align_form, cfg.align_bound, 0.0, cfg.kernel)

    n, dt = _steps_for(T, cfg.dt)
    ref_params = ModelParams(
        model="II", alignment=align, uni_diffusion=cfg.limit_uni_diffusion, toggles=toggles, dt=dt
    )
    ref_final, _ = run(state, ref_params, T)
    ref = _store(ref_final.f, out, "diffusion_ref.kinf")

    rows = []
    for i, eps in enumerate(eps_list):
        radius = eps if cfg.limit_radius == "scale" else cfg.eps_int
        if not 0 <= radius < 0.5:
            raise ConfigError(f"interaction radius {radius} out of range for eps={eps}", "limit_radius")
        n, dt = _steps_for(T, min(cfg.dt, cfg.limit_dt_factor * eps**2))
        p = ModelParams(
            model="I-scaled",
            alignment=replace(align, radius=radius),
            eps_scale=eps,
            toggles=toggles,
            dt=dt,
        )
        final, _ = run(state, p, T)
        f = _store(final.f, out, f"diffusion_eps{i}.kinf")
        rows.append([eps, l2_distance(f, ref), dt])
    dists = [r[1] for r in rows]
    monotone = all(b < a for a, b in zip(dists, dists[1:]))
    meta = {
        "monotone": monotone,
        "smallest_over_largest": min(dists) / max(dists) if max(dists) > 0 else 0.0,
    }
    return Table(["eps", "l2_distance", "dt"], rows, meta)


# -- agents vs kinetic -------------------------------------------------------


def cell_average_theta(profile: np.ndarray) -> np.ndarray:
    """Exact bin averages of a band-limited periodic profile over node-centred bins."""
    n = profile.size
    h = 2 * np.pi / n
    m = np.arange(n // 2 + 1)
    return np.fft.irfft(np.fft.rfft(profile) * np.sinc(m * h / (2 * np.pi)), n=n)


def trig_interpolant(profile: np.ndarray):
    """Callable evaluating the trigonometric interpolant of node samples."""
    n = profile.size
    c = np.fft.rfft(profile) / n
    m = np.arange(c.size)
    wts = np.where((m == 0) | (m == n // 2), 1.0, 2.0)
    theta0 = -np.pi

    def density(theta):
        ph = np.exp(1j * np.outer(np.asarray(theta) - theta0, m))
        return np.maximum((ph * (wts * c)).real.sum(axis=1), 0.0)

    return density


def _theta_marginal(f: KineticField) -> np.ndarray:
    return f.values.sum(axis=(0, 1)) * f.grid.cell_area


def fit_exponent(ns: Sequence[float], errs: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(ns), np.log(errs), 1)
    return float(slope)


def study_agents_vs_kinetic(
    cfg: RunConfig, n_list: Sequence[int], seeds: Optional[int] = None, out_dir=None
) -> Table:
    """Homogeneous rods (v0 = 0, all-to-all) against the theta-only model I.

    Agent coefficients are chosen so the mean-field limit has unit
    coefficients: gamma = 1/N with clamp bound N, sigma = sqrt 2, lam = 1.
    """
    seeds = cfg.seeds if seeds is None else seeds
    out = _prepare(out_dir)
    nth = cfg.ntheta
    kgrid = GridSpec(4, 4, nth)
    profile = _theta_marginal(initial_field(cfg))
    f0 = KineticField(kgrid, np.broadcast_to(profile, kgrid.shape))
    tg = cfg.toggles
    n, dt = _steps_for(cfg.t_end, cfg.dt)
    kparams = ModelParams(
        model="I",
        alignment=AlignmentSpec("clamped-sum", 1.0, 0.0),
        toggles=replace(tg, transport=False),
        dt=dt,
    )
    kfinal, _ = run(SimState(f0), kparams, cfg.t_end)
    kin = _store(kfinal.f, out, "agents_kinetic.kinf")
    target = cell_average_theta(_theta_marginal(kin))
    density = trig_interpolant(profile)
    h = 2 * np.pi / nth

    rows = []
    means = []
    for N in n_list:
        N = int(N)
        params = ag.AgentParams(
            N=N,
            v0=0.0,
            gamma=1.0 / N if tg.alignment else 0.0,
            sigma=math.sqrt(2.0) if tg.theta_diffusion else 0.0,
            lam=1.0 if tg.reversal else 0.0,
            r=1.0,
            l=1.0,
            w=math.pi / N,
        )
        errs = []
        for k in range(seeds):
            ens = ag.init_ensemble(params, cfg.seed + k, density)
            ens = ag.run_agents(ens, params, cfg.agent_dt, cfg.t_end)
            binned = _store(ag.bin_density(ens, kgrid), out, f"agents_N{N}_seed{k}.kinf")
            hist = _theta_marginal(binned)
            errs.append(math.sqrt(np.sum((hist - target) ** 2) * h))
        means.append(float(np.mean(errs)))
        rows.append([N, means[-1], float(np.std(errs))])
    meta = {}
    if len(n_list) > 1:
        meta["fit_exponent"] = fit_exponent(n_list, means)
    return Table(["N", "mean_l2_error", "std_l2_error"], rows, meta)


# -- velocity-averaging norms--------------------------------------------------

MOMENT_WEIGHTS = {
    "one": lambda th: np.ones_like(th),
    "cos2": lambda th: np.cos(2 * th),
    "sin2": lambda th: np.sin(2 * th),
}


def study_norms(cfg: RunConfig, eps_list: Sequence[float], out_dir=None) -> Table:
    """Fractional norms of theta-moments over a family of regularized model II runs."""
    out = _prepare(out_dir)
    f0 = initial_field(cfg)
    e0 = l2_norm_sq(f0.values, f0.grid)
    n, dt = _steps_for(cfg.t_end, cfg.dt)
    rows = []
    for i, eps in enumerate(eps_list):
        p = cfg.model_params(model="II-regularized", eps_reg=float(eps), dt=dt)
        collectors = {name: MomentCollector(phi) for name, phi in MOMENT_WEIGHTS.items()}
        final, _ = run(SimState(f0), p, cfg.t_end, collectors, cadence=min(cfg.cadence, n))
        _store(final.f, out, f"norms_eps{i}.kinf")
        for name, col in collectors.items():
            val = fractional_norm(col.window())
            rows.append([float(eps), name, val, val / e0])
    meta = {}
    for name in MOMENT_WEIGHTS:
        vals = [r[2] for r in rows if r[1] == name]
        meta[f"ratio_{name}"] = max(vals) / min(vals) if min(vals) > 0 else float("inf")
    meta["max_ratio"] = max(meta.values())
    meta["constant"] = max(r[3] for r in rows)
    return Table(["eps_reg", "phi", "fractional_norm", "norm_over_f0_sq"], rows, meta)
