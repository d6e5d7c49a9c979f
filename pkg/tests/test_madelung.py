import numpy as np
import pytest

from bohmfluid import madelung as MD
from bohmfluid.errors import NumericalAbort, ValidationError
from bohmfluid.fields import Grid1D, ScalarField
from bohmfluid.params import PhysicalParams


def gaussian_state(g, sigma0=1.0):
    rho = np.exp(-g.x ** 2 / (2 * sigma0 ** 2)) / (np.sqrt(2 * np.pi) * sigma0)
    return MD.MadelungState.from_arrays(g, rho, 0 * g.x)


def test_split_winding_recovers_integer_winding():
    g = Grid1D(64, 10.0)
    hbar = 0.5
    ramp = 2 * np.pi * hbar * 3 / g.length * (g.x - g.x[0])
    S = ramp + 0.2 * np.sin(2 * np.pi * g.x / g.length)
    Sp, gS = MD.split_winding(S, g, hbar)
    assert gS == pytest.approx(2 * np.pi * hbar * 3 / g.length)
    assert np.allclose(Sp, 0.2 * np.sin(2 * np.pi * g.x / g.length))
    with pytest.raises(ValidationError):
        MD.split_winding(S, g, 0.0)


def test_plane_wave_velocity():
    g = Grid1D(64, 10.0)
    p = PhysicalParams(mass=2.0)
    k0 = 2 * np.pi * 2 / g.length
    st = MD.MadelungState.from_arrays(g, np.ones(g.n), k0 * (g.x - g.x[0]))
    assert np.allclose(st.velocity(p), k0 / 2.0)


def test_ground_state_rates():
    g = Grid1D(256, 20.0)
    p = PhysicalParams()
    V = ScalarField(g, 0.5 * g.x ** 2)
    st = MD.MadelungState.from_arrays(g, np.exp(-g.x ** 2) / np.sqrt(np.pi), 0 * g.x)
    drho, dS = MD.madelung_rhs(st, p, V)
    sup = st.rho.values > 1e-8
    assert np.abs(drho.values).max() < 1e-10
    assert np.allclose(dS.values[sup], -0.5, atol=1e-6)
    E = MD.total_energy_field(st, p, V).values[sup]
    assert np.allclose(E, 0.5, atol=1e-6)


def test_free_gaussian_against_closed_form():
    from bohmfluid.schrodinger import free_gaussian_density
    g = Grid1D(512, 40.0)
    sol = MD.integrate(gaussian_state(g), PhysicalParams(), None, 1.0, stride=400)
    exact = free_gaussian_density(g.x, 1.0)
    assert sol[-1].time == pytest.approx(1.0)
    assert np.linalg.norm(sol[-1].rho.values - exact) / np.linalg.norm(exact) < 1e-5
    assert abs(sol[-1].mass() - sol[0].mass()) < 1e-13


def test_fd4_and_spectral_agree_without_vacuum():
    g = Grid1D(128, 20.0)
    rho = 1 + 0.2 * np.cos(2 * np.pi * g.x / g.length)
    st = MD.MadelungState.from_arrays(g, rho, 0 * g.x)
    p = PhysicalParams(kT=0.1)
    a = MD.integrate(st, p, None, 0.5, method="fd4", stride=10 ** 6)[-1].rho.values
    b = MD.integrate(st, p, None, 0.5, method="spectral", stride=10 ** 6)[-1].rho.values
    assert np.abs(a - b).max() < 1e-6


def test_snapshots_and_callback():
    g = Grid1D(64, 20.0)
    seen = []
    sol = MD.integrate(gaussian_state(g), PhysicalParams(), None, 0.1, dt=0.01, stride=3, callback=seen.append)
    assert [s.time for s in sol] == pytest.approx([0, 0.03, 0.06, 0.09, 0.1])
    assert len(seen) == len(sol)


def test_validation():
    g = Grid1D(64, 20.0)
    st = gaussian_state(g)
    p = PhysicalParams()
    with pytest.raises(ValidationError):
        MD.integrate(st, p, None, 0.0)
    with pytest.raises(ValidationError):
        MD.integrate(st, p, None, 1.0, stride=0)
    with pytest.raises(ValidationError):
        MD.integrate(st, p, None, 1.0, method="euler")
    with pytest.raises(ValidationError, match="hbar"):
        MD.integrate(st, PhysicalParams(hbar=0.0), None, 1.0)


def test_instability_aborts_with_last_state():
    g = Grid1D(128, 20.0)
    st = MD.MadelungState.from_arrays(g, 1 + 0.1 * np.cos(2 * np.pi * 8 * g.x / g.length), 0 * g.x)
    # dt four times the fd4/RK4 stability limit
    with pytest.raises(NumericalAbort) as exc:
        MD.integrate(st, PhysicalParams(), None, 10.0, dt=0.1)
    err = exc.value
    assert err.state is not None and np.all(np.isfinite(err.state.rho.values))
    assert err.diagnostics["step"] >= 0 and "reason" in err.diagnostics


def test_bohmian_trajectories_follow_width():
    # free packet: x(t) = x(0) sigma(t) / sigma0
    g = Grid1D(512, 40.0)
    sol = MD.integrate(gaussian_state(g), PhysicalParams(), None, 1.0, stride=82)
    seeds = np.array([-1.5, -0.3, 0.8, 2.0])
    tr = MD.bohmian_trajectories(sol, seeds, PhysicalParams())
    scale = np.sqrt(1 + (tr.times / 2) ** 2)
    assert np.abs(tr.positions - seeds[None, :] * scale[:, None]).max() < 1e-5
    assert not tr.flagged.any()


def test_trajectories_static_in_ground_state_and_flag_vacuum():
    g = Grid1D(256, 20.0)
    V = ScalarField(g, 0.5 * g.x ** 2)
    st = MD.MadelungState.from_arrays(g, np.exp(-g.x ** 2) / np.sqrt(np.pi), 0 * g.x)
    sol = MD.integrate(st, PhysicalParams(), V, 1.0, stride=100)
    tr = MD.bohmian_trajectories(sol, [0.5, -1.0, 9.0], PhysicalParams())
    assert np.abs(tr.positions[:, :2] - [0.5, -1.0]).max() < 1e-8
    assert list(tr.flagged) == [False, False, True]
