import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rodkinetics.errors import ConfigError, NumericalFailure, ParameterError
from rodkinetics.grid import GridSpec, KineticField, ScalarField, shift_pi_values, spectral_derivative
from rodkinetics.interaction import AlignmentSpec
from rodkinetics.models import (
    ModelParams,
    SimState,
    Toggles,
    run,
    step,
    step_chemo,
    step_model1,
    step_model1_scaled,
    step_model2,
    step_model3,
)

G = GridSpec(8, 8, 16)


def state_of(grid, vals, s=None):
    return SimState(KineticField(grid, np.broadcast_to(vals, grid.shape)), s)


def theta_amplitude(values, grid, weight):
    # least-squares amplitude of a theta profile, averaged over x
    w = weight(grid.theta)
    return float(np.mean(values @ w) / (w @ w))


def cos_signal(grid):
    x1 = grid.x1[:, None]
    return ScalarField(grid, np.broadcast_to(np.cos(2 * np.pi * x1), grid.xshape))


def test_theta_diffusion_multiplier():
    dt = 0.01
    p = ModelParams("I", dt=dt, toggles=Toggles.only("theta_diffusion"))
    st0 = state_of(G, (1 + np.cos(2 * G.theta)) / (2 * np.pi))
    amp = theta_amplitude(step(st0, p).f.values, G, lambda t: np.cos(2 * t)) * 2 * np.pi
    assert amp == pytest.approx(np.exp(-4 * dt), rel=1e-12)


def test_reversal_multiplier():
    dt = 0.01
    p = ModelParams("I", dt=dt, toggles=Toggles.only("reversal"))
    st0 = state_of(G, (1 + 0.1 * np.sin(G.theta)) / (2 * np.pi))
    out = step(st0, p).f.values
    amp = theta_amplitude(out, G, np.sin) * 2 * np.pi
    assert amp == pytest.approx(0.1 * np.exp(-2 * dt), rel=1e-12)
    mean = np.mean(out) * 2 * np.pi
    assert mean == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("eps", [1.0, 0.5, 0.1])
def test_scaled_reversal_multiplier(eps):
    dt = 0.002
    p = ModelParams("I-scaled", eps_scale=eps, dt=dt, toggles=Toggles.only("reversal"))
    st0 = state_of(G, (1 + 0.1 * np.sin(G.theta)) / (2 * np.pi))
    amp = theta_amplitude(step_model1_scaled(st0, p).f.values, G, np.sin) * 2 * np.pi
    assert amp == pytest.approx(0.1 * np.exp(-2 * dt / eps**2), rel=1e-12)


def test_transport_is_exact_characteristics():
    g = GridSpec(16, 16, 8)
    x1, x2, th = g.mesh()
    gx = lambda a, b: np.cos(2 * np.pi * (a + 2 * b)) + 0.5 * np.sin(2 * np.pi * b)
    h = 1 + 0.3 * np.cos(th) + 0.2 * np.sin(3 * th)
    dt, n = 0.05, 6
    p = ModelParams("I", dt=dt, toggles=Toggles.only("transport"))
    state, _ = run(state_of(g, gx(x1, x2) * h), p, dt * n)
    t = dt * n
    expect = gx(x1 - t * np.cos(th), x2 - t * np.sin(th)) * h
    np.testing.assert_allclose(state.f.values, np.broadcast_to(expect, g.shape), atol=1e-12)


def test_scaled_transport_speed():
    g = GridSpec(16, 4, 8)
    x1, _, th = g.mesh()
    eps, dt = 0.5, 0.02
    p = ModelParams("I-scaled", eps_scale=eps, dt=dt, toggles=Toggles.only("transport"))
    out = step(state_of(g, np.cos(2 * np.pi * x1) + 0 * th), p).f.values
    expect = np.cos(2 * np.pi * (x1 - dt / eps * np.cos(th)))
    np.testing.assert_allclose(out, np.broadcast_to(expect, g.shape), atol=1e-12)


@pytest.mark.parametrize("model", ["I", "I-scaled", "II", "II-regularized", "III"])
def test_isotropic_fixed_point(model):
    p = ModelParams(model, alignment=AlignmentSpec(radius=0.2), eps_scale=0.5, eps_reg=0.1, dt=0.01)
    f0 = np.full(G.shape, 1 / (2 * np.pi))
    s = ScalarField(G, np.zeros(G.xshape)) if model == "III" else None
    out = step(state_of(G, f0, s), p).f.values
    np.testing.assert_allclose(out, f0, rtol=0, atol=1e-15)


def random_field(seed, grid=G, symmetric=False):
    rng = np.random.default_rng(seed)
    v = 1 / (2 * np.pi) + 0.05 * rng.standard_normal(grid.shape)
    if symmetric:
        v = 0.5 * (v + shift_pi_values(v))
    # smooth it a little so the explicit flux is well resolved
    V = np.fft.fftn(v)
    kx = np.fft.fftfreq(grid.nx, 1 / grid.nx)[:, None, None]
    ky = np.fft.fftfreq(grid.ny, 1 / grid.ny)[None, :, None]
    km = np.fft.fftfreq(grid.ntheta, 1 / grid.ntheta)[None, None, :]
    V *= np.exp(-0.2 * (kx**2 + ky**2 + km**2))
    return np.fft.ifftn(V).real


def test_scaled_with_unit_eps_is_model1_bitwise():
    f0 = random_field(3)
    pa = ModelParams("I", alignment=AlignmentSpec(radius=0.2), dt=0.01)
    pb = ModelParams("I-scaled", alignment=AlignmentSpec(radius=0.2), eps_scale=1.0, dt=0.01)
    a, _ = run(state_of(G, f0), pa, 0.05)
    b, _ = run(state_of(G, f0), pb, 0.05)
    np.testing.assert_array_equal(a.f.values, b.f.values)


def test_model3_flat_signal_is_model2_bitwise():
    f0 = random_field(4, symmetric=True)
    s = ScalarField(G, np.full(G.xshape, 0.7))
    a, _ = run(state_of(G, f0), ModelParams("II", dt=0.01), 0.05)
    b, _ = run(state_of(G, f0, s), ModelParams("III", dt=0.01), 0.05)
    np.testing.assert_array_equal(a.f.values, b.f.values)


def uni_diffusion_rhs(values, grid):
    # div(e e^T grad f) evaluated from spectral derivatives, independent of the multiplier
    f = KineticField(grid, values)
    c, s = grid.cos_theta, grid.sin_theta
    fx = spectral_derivative(f, "x1").values
    fy = spectral_derivative(f, "x2").values
    a = c * c * fx + c * s * fy
    b = c * s * fx + s * s * fy
    return (
        spectral_derivative(f.with_values(a), "x1").values
        + spectral_derivative(f.with_values(b), "x2").values
    )


def test_uni_diffusion_against_explicit_oracle():
    g = GridSpec(8, 8, 8)
    x1, _, th = g.mesh()
    f0 = np.broadcast_to(np.cos(2 * np.pi * x1) * (1 + 0 * th), g.shape)
    t_end = 0.05
    p = ModelParams("II", dt=0.01, toggles=Toggles.only("x_diffusion"))
    got, _ = run(state_of(g, f0), p, t_end)
    # classical RK4 with a small explicit step
    u, h = f0.copy(), 1e-4
    for _ in range(int(round(t_end / h))):
        k1 = uni_diffusion_rhs(u, g)
        k2 = uni_diffusion_rhs(u + 0.5 * h * k1, g)
        k3 = uni_diffusion_rhs(u + 0.5 * h * k2, g)
        k4 = uni_diffusion_rhs(u + h * k3, g)
        u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    exact = np.cos(2 * np.pi * x1) * np.exp(-4 * np.pi**2 * np.cos(th) ** 2 * t_end)
    np.testing.assert_allclose(got.f.values, np.broadcast_to(exact, g.shape), atol=1e-13)
    ix = 0  # cos(2 pi x1) = 1 there
    rel = np.abs(got.f.values[ix, 0] - u[ix, 0]) / np.abs(u[ix, 0])
    assert rel.max() <= 1e-6


def test_regularization_adds_isotropic_decay():
    g = GridSpec(8, 8, 8)
    x1, _, th = g.mesh()
    f0 = np.broadcast_to(np.cos(2 * np.pi * x1) + 0 * th, g.shape)
    epsr, dt = 0.1, 0.01
    a = step(state_of(g, f0), ModelParams("II", dt=dt, toggles=Toggles.only("x_diffusion"))).f.values
    p = ModelParams("II-regularized", eps_reg=epsr, dt=dt, toggles=Toggles.only("x_diffusion"))
    b = step_model2(state_of(g, f0), p).f.values
    np.testing.assert_allclose(b, a * np.exp(-4 * np.pi**2 * epsr * dt), atol=1e-14)


def test_model3_mass_conserved_with_cosine_signal():
    f0 = random_field(5, symmetric=True)
    p = ModelParams("III", dt=0.005)
    mass = lambda st: st.f.values.sum() * G.cell_volume
    _, rec = run(state_of(G, f0, cos_signal(G)), p, 0.2, {"mass": mass}, cadence=4)
    m = np.array(rec["mass"])
    assert np.max(np.abs(m - m[0])) <= 1e-10 * 0.2 + 1e-15


def test_model3_drift_is_up_gradient():
    g = GridSpec(4, 4, 4)
    c = 1 / (2 * np.pi)
    dt = 1e-4
    p = ModelParams("III", dt=dt, toggles=Toggles.only("chemotaxis"))
    out = step_model3(state_of(g, np.full(g.shape, c), cos_signal(g)), p).f.values
    n = out.sum(axis=2) * g.dtheta
    # hand Euler step: dn/dt = 2 c (4 pi^2) cos(2 pi x1) * int cos^2 = 8 pi^3 c cos(2 pi x1)
    n_euler = 1.0 + dt * 8 * np.pi**3 * c * np.cos(2 * np.pi * g.x1)[:, None]
    np.testing.assert_allclose(n, np.broadcast_to(n_euler, g.xshape), rtol=1e-6)
    assert np.argmax(n[:, 0]) == 0


def test_model3_requires_signal():
    with pytest.raises(ConfigError):
        step(state_of(G, np.zeros(G.shape)), ModelParams("III"))


def test_model3_coupled_updates_signal():
    f0 = random_field(6, symmetric=True)
    s0 = ScalarField(G, np.zeros(G.xshape))
    p = ModelParams("III", dt=0.01, chemo="coupled")
    out = step(state_of(G, f0, s0), p)
    assert out.s is not None and out.s.time == pytest.approx(0.01)
    n = f0.sum(axis=2) * G.dtheta
    # in one short step s picks up roughly dt * n
    assert np.mean(out.s.values) == pytest.approx(0.01 * np.mean(n), rel=0.02)


def test_stepper_rejects_wrong_model():
    st0 = state_of(G, np.zeros(G.shape))
    with pytest.raises(ParameterError):
        step_model1(st0, ModelParams("II"))
    with pytest.raises(ParameterError):
        step_model2(st0, ModelParams("I"))


@pytest.mark.parametrize(
    "kw",
    [{"model": "IV"}, {"dt": 0.0}, {"eps_reg": -1.0}, {"model": "I-scaled", "eps_scale": 2.0}, {"chemo": "x"}],
)
def test_params_validation(kw):
    with pytest.raises(ParameterError):
        ModelParams(**kw)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numerical_failure_carries_time():
    vals = np.full(G.shape, 1e307)
    vals[0, 0, 0] = -1e307
    p = ModelParams("I", dt=0.1)
    with pytest.raises(NumericalFailure) as info:
        run(state_of(G, vals), p, 0.5)
    assert info.value.time == pytest.approx(0.1)


def test_step_chemo_examples():
    g = GridSpec(8, 8, 4)
    zero = ScalarField(g, np.zeros(g.xshape))
    one = ScalarField(g, np.ones(g.xshape))
    s = step_chemo(zero, one, 0.3)
    np.testing.assert_allclose(s.values, 1 - np.exp(-0.3), rtol=1e-14)
    s = step_chemo(cos_signal(g), zero, 0.05)
    np.testing.assert_allclose(s.values, cos_signal(g).values * np.exp(-(4 * np.pi**2 + 1) * 0.05), atol=1e-14)
    n = cos_signal(g).values + 2.0
    s = zero
    for _ in range(200):
        s = step_chemo(s, ScalarField(g, n), 0.1)
    steady = cos_signal(g).values / (4 * np.pi**2 + 1) + 2.0
    np.testing.assert_allclose(s.values, steady, atol=1e-8)
    with pytest.raises(ParameterError):
        step_chemo(zero, one, 0.0)


def test_run_zero_steps_and_observers():
    f0 = random_field(7)
    st0 = state_of(G, f0)
    p = ModelParams("I", dt=0.01)
    same, rec = run(st0, p, 0.0, {"mass": lambda s: s.f.values.sum()})
    assert same is st0 and rec["t"] == [0.0]
    mass = lambda s: s.f.values.sum() * G.cell_volume
    _, rec = run(st0, p, 0.1, {"mass": mass})
    assert len(rec["mass"]) == 11
    assert max(rec["mass"]) - min(rec["mass"]) <= 1e-10
    with pytest.raises(ParameterError):
        run(st0, p, 0.015)


def test_resume_is_bitwise():
    f0 = random_field(8)
    p = ModelParams("I", alignment=AlignmentSpec(radius=0.15), dt=0.01)
    full, _ = run(state_of(G, f0), p, 0.2)
    half, _ = run(state_of(G, f0), p, 0.1)
    resumed, _ = run(half, p, 0.2)
    np.testing.assert_array_equal(full.f.values, resumed.f.values)
    assert full.t == resumed.t


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_model1_linear_without_alignment(seed, a, b):
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal(G.shape), rng.standard_normal(G.shape)
    toggles = Toggles(alignment=False)
    p = ModelParams("I", dt=0.02, toggles=toggles)
    su = step(state_of(G, u), p).f.values
    sv = step(state_of(G, v), p).f.values
    suv = step(state_of(G, a * u + b * v), p).f.values
    np.testing.assert_allclose(suv, a * su + b * sv, atol=1e-12)


@pytest.mark.parametrize("model", ["II", "III"])
def test_pi_commutation(model):
    f0 = random_field(9, symmetric=True)
    s = cos_signal(G) if model == "III" else None
    p = ModelParams(model, alignment=AlignmentSpec(radius=0.2), dt=0.01)
    state, _ = run(state_of(G, f0, s), p, 0.2)
    u = state.f.values
    assert np.max(np.abs(u - shift_pi_values(u))) <= 1e-12
