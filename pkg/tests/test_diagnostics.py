import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rodkinetics.diagnostics import (
    EnergyLedger,
    MomentCollector,
    MomentWindow,
    energy_ledger_update,
    fractional_norm,
    l2_distance,
    moment_window_collect,
    nematic_order,
    nematic_symmetry_error,
    time_taper,
    total_mass,
    weak_pairings,
)
from rodkinetics.errors import ParameterError
from rodkinetics.grid import GridSpec, KineticField, shift_pi
from rodkinetics.models import ModelParams, SimState, Toggles, run

G = GridSpec(8, 8, 16)


def profile(grid, prof):
    return KineticField(grid, np.broadcast_to(prof(grid.theta), grid.shape))


def two_mode(grid, a, b, c):
    x1, x2, th = grid.mesh()
    v = 1 + a * np.cos(2 * np.pi * x1) * np.cos(2 * th) + b * np.cos(2 * np.pi * x2) * np.sin(2 * th)
    v = v + c * np.cos(2 * np.pi * x1) * np.sin(th)
    return KineticField(grid, np.broadcast_to(v / (2 * np.pi), grid.shape))


def test_mass_examples():
    assert total_mass(KineticField(G, np.full(G.shape, 1 / (2 * np.pi)))) == pytest.approx(1.0, rel=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5))
def test_mass_linear_and_shift_invariant(seed, c):
    rng = np.random.default_rng(seed)
    f = KineticField(G, rng.random(G.shape))
    g = KineticField(G, rng.random(G.shape))
    h = KineticField(G, f.values + c * g.values)
    assert total_mass(h) == pytest.approx(total_mass(f) + c * total_mass(g), abs=1e-12)
    assert total_mass(shift_pi(f)) == pytest.approx(total_mass(f), rel=1e-14)


def test_mass_after_step():
    f = two_mode(G, 0.4, 0.3, 0.2)
    out, _ = run(SimState(f), ModelParams("I", dt=0.01), 0.01)
    assert abs(total_mass(out.f) - total_mass(f)) <= 1e-12


def test_symmetry_error_examples():
    assert nematic_symmetry_error(profile(G, lambda t: np.cos(2 * t))) < 1e-14
    assert nematic_symmetry_error(KineticField(G, np.broadcast_to(G.cos2_theta, G.shape))) == 0.0
    # f - tau f = 2 sin theta, L2 norm 2 sqrt(pi * area)
    assert nematic_symmetry_error(profile(G, np.sin)) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-13)


def test_nematic_order_examples():
    iso = nematic_order(KineticField(G, np.full(G.shape, 1 / (2 * np.pi)))).values
    assert np.max(iso) < 1e-15
    half = nematic_order(profile(G, lambda t: (1 + np.cos(2 * t)) / (2 * np.pi))).values
    np.testing.assert_allclose(half, 0.5, rtol=1e-13)
    g = GridSpec(4, 4, 128)
    bump = nematic_order(profile(g, lambda t: np.exp(50 * np.cos(2 * (t - 0.7))))).values
    np.testing.assert_allclose(bump, 1.0, atol=0.02)
    assert np.all(nematic_order(KineticField(G, np.zeros(G.shape))).values == 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nematic_order_in_unit_interval(seed):
    f = KineticField(G, np.random.default_rng(seed).random(G.shape))
    order = nematic_order(f).values
    assert np.all(order >= 0) and np.all(order <= 1 + 1e-12)


def test_l2_distance_and_pairings():
    f = profile(G, lambda t: np.cos(t))
    z = KineticField(G, np.zeros(G.shape))
    assert l2_distance(f, z) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    bank = [np.ones(G.shape), np.broadcast_to(np.cos(G.theta), G.shape)]
    np.testing.assert_allclose(weak_pairings(f, bank), [0.0, math.pi], atol=1e-13)


def ledger_run(params, f0, t_end, cadence=1):
    ledger = EnergyLedger.start(f0, params.model, params.eps_reg)
    tick = params.dt * cadence
    obs = {"e": lambda s: energy_ledger_update(ledger, s.f, params.model, tick) if s.t > f0.time else None}
    run(SimState(f0), params, t_end, obs, cadence=cadence)
    return ledger


def test_ledger_linear_model1_balance_and_analytic_norm():
    a, b, c = 0.4, 0.3, 0.2
    f0 = two_mode(G, a, b, c)
    p = ModelParams("I", dt=0.005, toggles=Toggles(transport=False, alignment=False))
    led = ledger_run(p, f0, 1.0)
    t = np.array(led.times)
    exact = 1 / (2 * np.pi) + ((a * a + b * b) * np.exp(-8 * t) + c * c * np.exp(-6 * t)) / (8 * np.pi)
    np.testing.assert_allclose(led.l2_sq, exact, rtol=1e-12)
    # exact dissipation integrals: d/dt ||f||^2 = -2||d_theta f||^2 - ||f - tau f||^2
    dth = (a * a + b * b) * (1 - np.exp(-8 * t)) / (16 * np.pi) + c * c * (1 - np.exp(-6 * t)) / (48 * np.pi)
    rev = 4 * c * c * (1 - np.exp(-6 * t)) / (48 * np.pi)
    np.testing.assert_allclose(led.dtheta_sq_cum, dth, rtol=1e-3, atol=1e-15)
    np.testing.assert_allclose(led.reversal_sq_cum, rev, rtol=1e-3, atol=1e-15)
    balance = np.array(led.l2_sq) + 2 * np.array(led.dtheta_sq_cum) + np.array(led.reversal_sq_cum)
    np.testing.assert_allclose(balance, led.initial_energy, rtol=1e-5)


def test_ledger_with_transport_keeps_balance():
    f0 = two_mode(G, 0.4, 0.3, 0.2)
    p = ModelParams("I", dt=0.005, toggles=Toggles(alignment=False))
    led = ledger_run(p, f0, 0.5)
    balance = np.array(led.l2_sq) + 2 * np.array(led.dtheta_sq_cum) + np.array(led.reversal_sq_cum)
    np.testing.assert_allclose(balance, led.initial_energy, rtol=1e-5)
    assert np.all(np.diff(led.lhs) >= -1e-15)


def test_ledger_frozen_field_grows_linearly():
    f = two_mode(G, 0.4, 0.3, 0.0)
    led = EnergyLedger.start(f, "II-regularized", eps_reg=0.1)
    for _ in range(5):
        energy_ledger_update(led, f, "II-regularized", 0.1)
    cum = np.array(led.dtheta_sq_cum)
    np.testing.assert_allclose(np.diff(cum), cum[1], rtol=1e-12)
    assert cum[1] > 0
    np.testing.assert_allclose(np.diff(led.directional_sq_cum), led.directional_sq_cum[1], rtol=1e-12)
    np.testing.assert_allclose(np.diff(led.reg_sq_cum), led.reg_sq_cum[1], rtol=1e-12)
    assert led.columns == ["t", "l2_sq", "dtheta_sq_cum", "directional_sq_cum", "reg_sq_cum", "lhs", "bound"]
    assert len(led.rows()) == 6


def test_ledger_model_mismatch():
    f = two_mode(G, 0.4, 0.3, 0.0)
    led = EnergyLedger.start(f, "I")
    with pytest.raises(ParameterError):
        energy_ledger_update(led, f, "II", 0.1)
    with pytest.raises(ParameterError):
        EnergyLedger.start(f, "nope")


def test_full_model2_ledger_bound():
    f0 = two_mode(G, 0.4, 0.3, 0.0)
    p = ModelParams("II", dt=0.01)
    led = ledger_run(p, f0, 0.5, cadence=2)
    assert led.lhs[-1] <= led.bound[-1]
    assert np.all(np.diff(led.lhs) >= 0)


def test_taper_shape():
    w = time_taper(np.linspace(0, 1, 101))
    assert w[0] == 0 and w[-1] == 0
    assert np.all(w[10:91] == 1)
    assert np.all((w >= 0) & (w <= 1))


def window_of(rho, dt=0.05, psi=None):
    times = dt * np.arange(rho.shape[0])
    return MomentWindow(G, times, rho, np.ones(rho.shape[0]) if psi is None else psi)


def test_fractional_norm_zero_and_parseval():
    assert fractional_norm(window_of(np.zeros((20,) + G.xshape))) == 0.0
    rho = np.random.default_rng(0).standard_normal((20,) + G.xshape)
    w = window_of(rho)
    plain = np.sum(rho**2) * G.cell_area * 0.05
    assert fractional_norm(w, exponent=0) == pytest.approx(plain, rel=1e-12)
    assert fractional_norm(w) >= plain


def test_fractional_norm_single_mode():
    K, dt, m, A = 40, 0.025, 3, 1.7
    T = K * dt
    t = dt * np.arange(K)[:, None, None]
    x1 = G.x1[None, :, None]
    rho = A * np.cos(2 * np.pi * x1) * np.cos(2 * np.pi * m * t / T) + 0 * G.x2[None, None, :]
    tau = 2 * np.pi * m / T
    oracle = A * A * T / 4 * (1 + (tau**2 + 16 * np.pi**4) ** (1 / 7))
    assert fractional_norm(window_of(rho, dt)) == pytest.approx(oracle, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-4, 4).filter(lambda c: abs(c) > 1e-3))
def test_fractional_norm_quadratic(seed, c):
    rho = np.random.default_rng(seed).standard_normal((12,) + G.xshape)
    assert fractional_norm(window_of(c * rho)) == pytest.approx(c * c * fractional_norm(window_of(rho)), rel=1e-10)


def test_window_requires_uniform_cadence():
    rhos = [np.zeros(G.xshape)] * 3
    with pytest.raises(ParameterError):
        moment_window_collect(G, [0.0, 0.1, 0.3], rhos)
    w = MomentWindow(G, np.array([0.0, 0.1, 0.3]), np.zeros((3,) + G.xshape), np.ones(3))
    with pytest.raises(ParameterError):
        fractional_norm(w)


def test_collector_density_history():
    f0 = KineticField(G, np.full(G.shape, 1 / (2 * np.pi)))
    col = MomentCollector(1.0)
    run(SimState(f0), ModelParams("II", dt=0.01), 0.1, {"rho": col})
    w = col.window()
    assert w.rho.shape == (11,) + G.xshape
    np.testing.assert_allclose(w.rho, 1.0, rtol=1e-13)
    assert w.psi[0].max() == 0 and w.psi[5].min() == 1
    with pytest.raises(ParameterError):
        MomentCollector(1.0).window()
