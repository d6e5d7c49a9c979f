import numpy as np
import pytest
from hypothesis import given, strategies as st

from bohmfluid import covariant as C
from bohmfluid import kernels as K
from bohmfluid.errors import NumericalAbort, RecoveryError, ValidationError
from bohmfluid.fields import Grid1D, ScalarField, SpacetimeField, deriv
from bohmfluid.params import PhysicalParams
from bohmfluid.potentials import bohm_potential


def test_lorentz_factor():
    assert C.lorentz_factor(0.6, 1.0) == pytest.approx(1.25)
    v = 1 - 1e-12
    assert C.lorentz_factor(v, 1.0) == pytest.approx(1 / np.sqrt((1 - v) * (1 + v)), rel=1e-9)
    with pytest.raises(ValidationError):
        C.lorentz_factor([0.1, 1.0], 1.0)


def test_stress_energy_at_rest(grid):
    p = PhysicalParams(kT=0.3, c=5.0, mass=2.0)
    rho = np.full(grid.n, 1.7)
    T = C.stress_energy(C.RelFluidState.from_arrays(grid, rho, 0 * rho), p)
    h = 0.3 * 1.7 / 2.0
    assert np.allclose(T.T00.values, 1.7 * (1 + 0.3 / (2.0 * 25)) * 25 - h)
    assert np.allclose(T.T0x.values, 0.0) and np.allclose(T.Txx.values, h)
    assert T.Tx0 is T.T0x


def test_momentum_density_low_speed_limit(grid):
    p = PhysicalParams(c=1e4)
    rho = 1 + 0.1 * np.sin(2 * np.pi * grid.x / grid.length)
    v = 0.3 * np.cos(2 * np.pi * grid.x / grid.length)
    T = C.stress_energy(C.RelFluidState.from_arrays(grid, rho, v), p)
    assert np.allclose(T.T0x.values / p.c, rho * v, rtol=1e-7)


def test_state_with_superluminal_velocity_rejected(grid):
    st = C.RelFluidState.from_arrays(grid, np.ones(grid.n), np.full(grid.n, 2.0))
    with pytest.raises(ValidationError):
        C.stress_energy(st, PhysicalParams(c=2.0))


@given(st.integers(0, 2 ** 32 - 1))
def test_newton_matches_closed_form_for_frozen_kappa(seed):
    rng = np.random.default_rng(seed)
    n, c = 200, rng.uniform(2, 50)
    p = PhysicalParams(kT=rng.uniform(0, 0.5), c=c)
    alpha = 1 + p.kT / c ** 2
    rho = rng.uniform(0.1, 3, n)
    v = rng.uniform(-0.9, 0.9, n) * c
    kap = rng.uniform(-0.2, 0.2, n)
    g2 = 1 / (1 - (v / c) ** 2)
    E = rho * (alpha * c * c * g2 - kap)
    M = rho * alpha * g2 * v
    r_cf, v_cf = C.recover_closed_form(E, M, kap, p)
    assert np.allclose(r_cf, rho, rtol=1e-11) and np.allclose(v_cf, v, rtol=1e-11, atol=1e-12 * c)
    r_nt, v_nt, its = K.recover_newton(E, M, kap, alpha, c, rho * 1.05, 0.5 * v, 1e-12, 50)
    assert np.all(its >= 0)
    assert np.allclose(r_nt, rho, rtol=1e-11) and np.allclose(v_nt, v, rtol=1e-11, atol=1e-12 * c)


def test_classical_roundtrip_needs_one_sweep(grid, rng):
    p = PhysicalParams(hbar=0.0, kT=0.05, c=10.0)
    rho = np.exp(0.3 * np.sin(2 * np.pi * grid.x / grid.length))
    v = 6.0 * np.cos(2 * np.pi * grid.x / grid.length)
    V = ScalarField(grid, 0.1 * np.cos(4 * np.pi * grid.x / grid.length))
    T = C.stress_energy(C.RelFluidState.from_arrays(grid, rho, v), p, V)
    guess = C.RelFluidState.from_arrays(grid, rho * (1 + 0.05 * rng.standard_normal(grid.n)), 0 * v)
    out = C.primitive_recovery(T.T00, T.T0x.values / p.c, p, V, guess, sweeps=1)
    assert np.abs(out.rho.values - rho).max() < 1e-12 and np.abs(out.v.values - v).max() < 1e-11


def test_quantum_roundtrip_with_picard_tolerance(grid, rng):
    p = PhysicalParams(hbar=1.0, kT=0.02, c=12.0)
    rho = 1 + 0.3 * np.sin(2 * np.pi * grid.x / grid.length) ** 2
    v = 4.0 * np.sin(2 * np.pi * 2 * grid.x / grid.length)
    T = C.stress_energy(C.RelFluidState.from_arrays(grid, rho, v), p)
    guess = C.RelFluidState.from_arrays(grid, rho * 1.01, v * 0.9)
    out = C.primitive_recovery(T.T00, T.T0x.values / p.c, p, None, guess, sweeps=100, picard_tol=1e-15)
    assert np.abs(out.rho.values - rho).max() < 1e-12
    with pytest.raises(RecoveryError, match="Picard"):
        C.primitive_recovery(T.T00, T.T0x.values / p.c, p, None, guess, sweeps=1, picard_tol=1e-15)


def test_recovery_failure_names_the_point(grid):
    p = PhysicalParams(hbar=0.0, c=5.0)
    rho = np.ones(grid.n)
    T = C.stress_energy(C.RelFluidState.from_arrays(grid, rho, 0 * rho), p)
    E = T.T00.values.copy()
    M = np.zeros(grid.n)
    M[17] = 2 * E[17] / p.c            # |M| c > E: no subluminal solution
    guess = C.RelFluidState.from_arrays(grid, rho, 0 * rho)
    with pytest.raises(RecoveryError, match="grid point 17") as exc:
        C.primitive_recovery(E, M, p, None, guess)
    assert exc.value.diagnostics["point"] == 17


def test_step_guards():
    g = Grid1D(64, 20.0)
    st0 = C.RelFluidState.from_arrays(g, np.ones(g.n), np.zeros(g.n))
    with pytest.raises(ValidationError, match="CFL"):
        C.rel_fluid_step(st0, PhysicalParams(c=10.0), None, dt=0.1)
    with pytest.raises(ValidationError, match="finite c"):
        C.rel_fluid_step(st0, PhysicalParams(), None, dt=1e-4)
    fine = Grid1D(1024, 20.0)
    st1 = C.RelFluidState.from_arrays(fine, np.ones(fine.n), np.zeros(fine.n))
    p = PhysicalParams(c=2.0)
    assert C.picard_ratio(fine, p) > 0.5
    with pytest.raises(ValidationError, match="Picard"):
        C.rel_fluid_step(st1, p, None, dt=1e-4)


def test_integration_conserves_and_wraps_failures():
    g = Grid1D(64, 20.0)
    x = g.x
    p = PhysicalParams(kT=0.01, c=15.0)
    st0 = C.RelFluidState.from_arrays(g, 1 + 0.1 * np.exp(-x ** 2), 0.5 * np.sin(2 * np.pi * x / g.length))
    sol = C.integrate_relativistic(st0, p, None, 0.5, stride=20)
    E = [s.E.sum() for s in sol]
    M = [s.M.sum() for s in sol]
    assert np.ptp(E) / E[0] < 1e-13 and np.ptp(M) / np.abs(sol[0].M).sum() < 1e-13
    assert sol[-1].time == pytest.approx(0.5)


def test_continuity_residual_for_translation():
    g = Grid1D(128, 20.0)
    u, c = 0.7, 10.0
    k = 2 * np.pi / g.length
    hr = SpacetimeField.from_function(g, lambda x, t: 1 + 0.2 * np.cos(k * (x - u * t)), 0.0, 0.01, 5)
    hv = SpacetimeField.from_function(g, lambda x, t: u + 0 * x * t, 0.0, 0.01, 5)
    assert np.abs(C.continuity_residual(hr, hv, c).values).max() < 1e-9
    bad = SpacetimeField.from_function(g, lambda x, t: u + 0 * x * t, 0.0, 0.02, 5)
    with pytest.raises(ValidationError, match="misaligned"):
        C.continuity_residual(hr, bad, c)


def test_quantum_stress_gradient_equals_density_times_potential_gradient(grid):
    p = PhysicalParams(hbar=0.9)
    rho = ScalarField(grid, 1 + 0.3 * np.cos(2 * np.pi * grid.x / grid.length))
    hq = C.enthalpy_density(rho, p, None, "quantum-stress").values
    vq = bohm_potential(rho, p).values
    assert np.allclose(deriv(hq, grid, 1), rho.values * deriv(vq, grid, 1), atol=1e-12)
    # the enthalpy as printed carries d(V_Q rho) instead
    hp = C.enthalpy_density(rho, p, None, "printed").values
    assert np.allclose(deriv(hp, grid, 1), deriv(vq * rho.values, grid, 1), atol=1e-12)


def _history(p):
    g = Grid1D(128, 40.0)
    k1 = 2 * np.pi / g.length
    hr = SpacetimeField.from_function(g, lambda x, t: 1 + 0.2 * np.cos(k1 * x - 0.3 * t), 0.0, 0.01, 9)
    hv = SpacetimeField.from_function(g, lambda x, t: 0.5 * np.sin(k1 * x + 0.2 * t), 0.0, 0.01, 9)
    return g, hr, hv, ScalarField(g, 0.05 * np.cos(2 * k1 * g.x))


def test_force_density_sign_analysis():
    p = PhysicalParams(hbar=1.0, kT=0.01, c=10.0)
    g, hr, hv, V = _history(p)
    fr = C.formulation_residuals(hr, hv, p, V)
    # the two formulations differ by exactly twice the force density
    assert fr["diff_flipped"] < 1e-12
    assert fr["diff_literal"] == pytest.approx(2 * fr["scale"], rel=1e-9)


def test_component_report_factors():
    p = PhysicalParams(hbar=1.0, kT=0.01, c=10.0)
    g, hr, hv, V = _history(p)
    rep = C.component_report(hr, hv, p, V)
    assert rep["beta0_printed_plus_c_times_tensor"] < 1e-10
    assert rep["betax_inertia_scaled_by_c2"] < 1e-10
    assert rep["betax_printed_minus_tensor"] > 1.0


def test_nonrelativistic_limit_quantum_stress_variant():
    from bohmfluid.acceptance import relativistic_limit_study
    cs = (10.0, 20.0)
    d, _ = relativistic_limit_study(cs, h_variant="quantum-stress")
    assert 3.4 < d[0] / d[1] < 4.6


def test_nr_limit_integrator_rejects_blowup():
    g = Grid1D(64, 20.0)
    p = PhysicalParams(hbar=1.0, c=10.0)
    with pytest.raises(NumericalAbort):
        C.nr_limit_integrate(np.ones(g.n) + 0.5 * np.cos(16 * 2 * np.pi * g.x / g.length), np.zeros(g.n),
                             p, None, g, 5.0, dt=0.5)
