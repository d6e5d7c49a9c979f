"""Special-relativistic fluid with quantum-potential enthalpy, 1+1D.

Signature diag(+1, -1).  Contravariant components with x^0 = ct:
    T^00 = gamma^2 w c^2 - h,   T^0x = gamma^2 w c v,   T^xx = h + gamma^2 w v^2,
where w = P/c^2 + rho (rest-frame mass density rho, P = kT rho / m) and h is the
enthalpy density.  Conserved pair: E = T^00 (flux c T^0x), M = T^0x / c (flux T^xx).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .errors import NumericalAbort, RecoveryError, ValidationError
from .fields import Grid1D, ScalarField, SpacetimeField, deriv, time_derivative, check_interior
from .params import PhysicalParams
from .potentials import bohm_potential

H_VARIANTS = ("printed", "quantum-stress")


@dataclass(frozen=True)
class RelFluidState:
    rho: ScalarField
    v: ScalarField
    time: float = 0.0
    # conserved densities carried by the stepper (None until first computed)
    E: np.ndarray | None = field(default=None, repr=False, compare=False)
    M: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def grid(self) -> Grid1D:
        return self.rho.grid

    @classmethod
    def from_arrays(cls, grid, rho, v, time=0.0, E=None, M=None):
        return cls(ScalarField(grid, rho), ScalarField(grid, v), time, E, M)

    def check(self, p: PhysicalParams):
        if np.abs(self.v.values).max() >= p.c:
            raise ValidationError("state has |v| >= c")


@dataclass(frozen=True)
class StressEnergy1p1:
    T00: ScalarField
    T0x: ScalarField
    Txx: ScalarField

    @property
    def Tx0(self):
        return self.T0x


def lorentz_factor(v, c):
    """(1 - v^2/c^2)^(-1/2) via log1p, stable up to |v| -> c."""
    v = np.asarray(v, float)
    beta = v / c
    if np.any(np.abs(beta) >= 1):
        raise ValidationError("lorentz_factor needs |v| < c")
    return np.exp(-0.5 * (np.log1p(-beta) + np.log1p(beta)))


def _gamma2(v, c):
    return c * c / ((c - v) * (c + v))


def continuity_residual(hist_rho: SpacetimeField, hist_v: SpacetimeField, c: float,
                        i: int | None = None) -> ScalarField:
    """d_t rho + d_x(rho v), i.e. the four-divergence of J = (rho c, rho v)."""
    if (hist_rho.grid != hist_v.grid or hist_rho.values.shape != hist_v.values.shape
            or hist_rho.t0 != hist_v.t0 or hist_rho.dt != hist_v.dt):
        raise ValidationError("density and velocity histories are misaligned")
    if i is None:
        i = hist_rho.values.shape[0] // 2
    J0 = SpacetimeField(hist_rho.grid, hist_rho.t0, hist_rho.dt, hist_rho.values * c)
    div = time_derivative(J0, i, 1) / c + deriv(hist_rho.values[i] * hist_v.values[i], hist_rho.grid, 1)
    return ScalarField(hist_rho.grid, div)


def _kappa(rho, p, V, variant, method="spectral"):
    """Enthalpy per unit density: h = kappa * rho."""
    g = rho.grid
    Vv = np.zeros(g.n) if V is None else V.values
    if p.hbar == 0:
        return (p.kT + Vv) / p.mass
    if variant == "printed":
        vq = bohm_potential(rho, p, "quantum", method).values
        return (p.kT + Vv + vq) / p.mass
    if variant == "quantum-stress":
        ln = np.log(np.maximum(rho.values, p.rho_floor))
        return (p.kT + Vv) / p.mass - p.hbar ** 2 / (4 * p.mass ** 2) * deriv(ln, g, 2, method)
    raise ValidationError(f"unknown enthalpy variant {variant!r}")


def enthalpy_density(rho: ScalarField, p: PhysicalParams, V: ScalarField | None = None,
                     variant: str = "printed", method: str = "spectral") -> ScalarField:
    """h = P + (V + V_Q) rho / m with P = kT rho / m.

    variant "quantum-stress" replaces V_Q rho by the quantum stress
    -(hbar^2/4m) rho d^2 ln rho, whose gradient equals rho d V_Q (diagnostic only).
    """
    return ScalarField(rho.grid, _kappa(rho, p, V, variant, method) * rho.values)


def _components(rho, v, h, p):
    c = p.c
    g2 = _gamma2(v, c)
    w = rho * (1 + p.kT / (p.mass * c * c))
    return g2 * w * c * c - h, g2 * w * c * v, h + g2 * w * v * v


def stress_energy(st: RelFluidState, p: PhysicalParams, V: ScalarField | None = None,
                  variant: str = "enthalpy", h_variant: str = "printed",
                  method: str = "spectral") -> StressEnergy1p1:
    """Tensor components; ``variant="pressure"`` puts P in place of h."""
    st.check(p)
    if variant == "enthalpy":
        h = enthalpy_density(st.rho, p, V, h_variant, method).values
    elif variant == "pressure":
        h = p.kT * st.rho.values / p.mass
    else:
        raise ValidationError(f"unknown stress-energy variant {variant!r}")
    T00, T0x, Txx = _components(st.rho.values, st.v.values, h, p)
    g = st.grid
    return StressEnergy1p1(ScalarField(g, T00), ScalarField(g, T0x), ScalarField(g, Txx))


def force_density(rho: ScalarField, V: ScalarField | None, VQ: ScalarField, mass: float = 1.0) -> ScalarField:
    """Spatial contravariant component G^x = -d^x[(V+V_Q) rho/m] = +d_x[(V+V_Q) rho/m]."""
    g = rho.grid
    Vv = np.zeros(g.n) if V is None else V.values
    return ScalarField(g, deriv((Vv + VQ.values) * rho.values / mass, g, 1))


# ---------------------------------------------------------------- recovery

def recover_closed_form(E, M, kappa, p: PhysicalParams):
    """Exact inversion for frozen kappa (oracle for the Newton solver).

    With r = M/E, v solves (r kappa/c^2) v^2 - alpha v + r(alpha c^2 - kappa) = 0;
    the root continuous through r = 0 is taken in cancellation-free form.
    """
    c = p.c
    alpha = 1 + p.kT / (p.mass * c * c)
    r = M / E
    A = r * kappa / c ** 2
    B = -alpha
    C = r * (alpha * c * c - kappa)
    v = 2 * C / (-B + np.sqrt(B * B - 4 * A * C))
    rho = E / (alpha * c * c * _gamma2(v, c) - kappa)
    return rho, v


def primitive_recovery(E, M, p: PhysicalParams, V: ScalarField | None, guess: RelFluidState,
                       sweeps: int = 2, h_variant: str = "printed", tol: float = 1e-12,
                       maxit: int = 50, picard_tol: float | None = None) -> RelFluidState:
    """Point-wise Newton for (rho, v) given (E, M), kappa frozen from the current
    density and refreshed between Picard passes.

    Without ``picard_tol`` exactly ``sweeps`` passes run (cheap, for time stepping
    with a warm start).  With it, passes continue until the relative change in rho
    and v/c drops below ``picard_tol``, ``sweeps`` then being the cap.
    """
    g = guess.grid
    E = np.asarray(E.values if isinstance(E, ScalarField) else E, float)
    M = np.asarray(M.values if isinstance(M, ScalarField) else M, float)
    alpha = 1 + p.kT / (p.mass * p.c ** 2)
    rho, v = guess.rho.values.copy(), guess.v.values.copy()
    for sweep in range(max(1, sweeps)):
        kap = _kappa(ScalarField(g, np.maximum(rho, p.rho_floor)), p, V, h_variant)
        rho_old, v_old = rho, v
        rho, v, its = K.recover_newton(E, M, kap, alpha, p.c, rho, v, tol, maxit)
        bad = its < 0
        if bad.any() or not np.all(np.isfinite(rho)):
            j = int(np.flatnonzero(bad | ~np.isfinite(rho))[0])
            g2 = _gamma2(v[j], p.c)
            res = abs(rho[j] * (alpha * p.c ** 2 * g2 - kap[j]) - E[j]) + abs(rho[j] * alpha * g2 * v[j] - M[j])
            raise RecoveryError(f"primitive recovery did not converge at grid point {j} "
                                f"(x={g.x[j]:.6g}), residual {res:.3e}",
                                diagnostics={"point": j, "residual": res})
        if picard_tol is not None:
            change = max(np.abs(rho - rho_old).max() / np.abs(rho).max(), np.abs(v - v_old).max() / p.c)
            if change < picard_tol:
                break
    else:
        if picard_tol is not None:
            raise RecoveryError(f"Picard refresh did not converge in {sweeps} sweeps (last change {change:.3e})",
                                diagnostics={"sweeps": sweeps, "change": change})
    return RelFluidState.from_arrays(g, rho, v, guess.time, E, M)


# ---------------------------------------------------------------- stepping

def picard_ratio(grid: Grid1D, p: PhysicalParams) -> float:
    """Contraction estimate hbar^2 k_max^2 / (4 m^2 c^2) of the kappa refresh."""
    kmax = np.pi / grid.dx
    return (p.hbar * kmax) ** 2 / (4 * p.mass ** 2 * p.c ** 2)


def default_rel_dt(grid: Grid1D, p: PhysicalParams) -> float:
    dt = 0.45 * grid.dx / p.c
    if p.hbar > 0:
        dt = min(dt, 0.1 * p.mass * grid.dx ** 2 / p.hbar)
    return dt


def _conserved(st, p, V, h_variant):
    if st.E is not None and st.M is not None:
        return st.E, st.M
    T = stress_energy(st, p, V, "enthalpy", h_variant)
    return T.T00.values, T.T0x.values / p.c


def _rates(E, M, p, V, guess, sweeps, h_variant):
    prim = primitive_recovery(E, M, p, V, guess, sweeps, h_variant)
    g = guess.grid
    h = enthalpy_density(prim.rho, p, V, h_variant).values
    _, T0x, Txx = _components(prim.rho.values, prim.v.values, h, p)
    return -deriv(p.c * T0x, g, 1), -deriv(Txx, g, 1), prim


def rel_fluid_step(st: RelFluidState, p: PhysicalParams, V: ScalarField | None, dt: float,
                   sweeps: int = 2, h_variant: str = "printed") -> RelFluidState:
    """One RK4 step of dE/dt = -d_x(c T^0x), dM/dt = -d_x T^xx, then recovery."""
    g = st.grid
    if not p.relativistic:
        raise ValidationError("relativistic stepping needs a finite c", keys=["physics.c"])
    if dt > 0.5 * g.dx / p.c * (1 + 1e-12):
        raise ValidationError(f"CFL violated: dt={dt:.4g} > 0.5 dx/c = {0.5 * g.dx / p.c:.4g}",
                              keys=["scenario.dt"])
    if p.hbar > 0 and picard_ratio(g, p) > 0.5:
        raise ValidationError(f"grid too fine for the Picard refresh: hbar^2 kmax^2/(4 m^2 c^2) = "
                              f"{picard_ratio(g, p):.3g} > 0.5; use fewer points or larger c",
                              keys=["grid.n", "physics.c"])
    E, M = _conserved(st, p, V, h_variant)
    a1, b1, g1 = _rates(E, M, p, V, st, sweeps, h_variant)
    a2, b2, g2 = _rates(E + 0.5 * dt * a1, M + 0.5 * dt * b1, p, V, g1, sweeps, h_variant)
    a3, b3, g3 = _rates(E + 0.5 * dt * a2, M + 0.5 * dt * b2, p, V, g2, sweeps, h_variant)
    a4, b4, g4 = _rates(E + dt * a3, M + dt * b3, p, V, g3, sweeps, h_variant)
    En = E + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
    Mn = M + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
    out = primitive_recovery(En, Mn, p, V, g4, sweeps, h_variant)
    return RelFluidState.from_arrays(g, out.rho.values, out.v.values, st.time + dt, En, Mn)


def integrate_relativistic(st: RelFluidState, p: PhysicalParams, V: ScalarField | None, t_end: float,
                           dt: float | None = None, stride: int = 10, sweeps: int = 2,
                           h_variant: str = "printed", callback=None) -> list[RelFluidState]:
    g = st.grid
    dt0 = default_rel_dt(g, p) if dt is None else float(dt)
    nsteps = int(np.ceil((t_end - st.time) / dt0 - 1e-9))
    if nsteps < 1:
        raise ValidationError("t_end must exceed the start time")
    dt = (t_end - st.time) / nsteps
    E, M = _conserved(st, p, V, h_variant)
    cur = RelFluidState.from_arrays(g, st.rho.values, st.v.values, st.time, E, M)
    out = [cur]
    if callback:
        callback(cur)
    for n in range(1, nsteps + 1):
        try:
            cur = rel_fluid_step(cur, p, V, dt, sweeps, h_variant)
        except RecoveryError as e:
            raise NumericalAbort(f"relativistic step {n} failed: {e}", state=cur,
                                 diagnostics=dict(e.diagnostics, step=n, t=cur.time)) from e
        if n % stride == 0 or n == nsteps:
            out.append(cur)
            if callback:
                callback(cur)
    return out


# ---------------------------------------------------------------- c -> infinity limit

def nr_limit_integrate(rho0, v0, p: PhysicalParams, V, grid, t_end, dt=None, h_variant="printed"):
    """Euler system d_t rho + d_x(rho v) = 0, d_t(rho v) + d_x(rho v^2 + h) = 0:
    the c -> infinity limit of the tensor equations with the same enthalpy."""
    dt0 = 0.1 * p.mass * grid.dx ** 2 / max(p.hbar, 1e-3) if dt is None else dt
    n = int(np.ceil(t_end / dt0 - 1e-9))
    dt = t_end / n

    def rates(r, q):
        v = q / r
        h = enthalpy_density(ScalarField(grid, r), p, V, h_variant).values
        return -deriv(q, grid, 1), -deriv(q * v + h, grid, 1)

    r = np.array(rho0, float)
    q = r * np.asarray(v0, float)
    for step in range(n):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                a1, b1 = rates(r, q)
                a2, b2 = rates(r + 0.5 * dt * a1, q + 0.5 * dt * b1)
                a3, b3 = rates(r + 0.5 * dt * a2, q + 0.5 * dt * b2)
                a4, b4 = rates(r + dt * a3, q + dt * b3)
                rn = r + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
                qn = q + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        except ValidationError:        # a non-finite intermediate field
            rn = np.full_like(r, np.nan)
        if not (np.all(np.isfinite(rn)) and np.all(np.isfinite(qn)) and rn.min() > 0):
            raise NumericalAbort(f"non-relativistic limit integration broke down at step {step}",
                                 diagnostics={"step": step, "t": step * dt, "dt": dt})
        r, q = rn, qn
    return r, q / r


# ---------------------------------------------------------------- diagnostics

def _tensor_history(hist_rho, hist_v, p, V, variant, h_variant):
    g = hist_rho.grid
    T0 = []
    Tx = []
    for r, v in zip(hist_rho.values, hist_v.values):
        st = RelFluidState.from_arrays(g, r, v)
        T = stress_energy(st, p, V, variant, h_variant)
        T0.append([T.T00.values, T.T0x.values])
        Tx.append([T.T0x.values, T.Txx.values])
    return np.array(T0), np.array(Tx)


def tensor_divergence(hist_rho: SpacetimeField, hist_v: SpacetimeField, p: PhysicalParams,
                      V: ScalarField | None, i: int | None = None, variant: str = "enthalpy",
                      h_variant: str = "printed"):
    """(d_alpha T^{alpha 0}, d_alpha T^{alpha x}) at history index i, with d_0 = (1/c) d_t."""
    if i is None:
        i = hist_rho.values.shape[0] // 2
    check_interior(hist_rho, i)
    g = hist_rho.grid
    T0, Tx = _tensor_history(hist_rho, hist_v, p, V, variant, h_variant)
    out = []
    for beta in range(2):
        ht = SpacetimeField(g, hist_rho.t0, hist_rho.dt, T0[:, beta])
        out.append(time_derivative(ht, i, 1) / p.c + deriv(Tx[i, beta], g, 1))
    return ScalarField(g, out[0]), ScalarField(g, out[1])


def formulation_residuals(hist_rho: SpacetimeField, hist_v: SpacetimeField, p: PhysicalParams,
                          V: ScalarField | None, i: int | None = None) -> dict:
    """Spatial residuals of the pressure tensor plus force density and of the
    enthalpy tensor, and their pointwise difference.

    ``diff_literal`` uses G^x = +d_x[(V+V_Q) rho/m] as defined above;
    ``diff_flipped`` uses the opposite sign of the force density.
    """
    if i is None:
        i = hist_rho.values.shape[0] // 2
    g = hist_rho.grid
    _, div41 = tensor_divergence(hist_rho, hist_v, p, V, i, "pressure")
    _, div44 = tensor_divergence(hist_rho, hist_v, p, V, i, "enthalpy")
    rho_i = ScalarField(g, hist_rho.values[i])
    G = force_density(rho_i, V, bohm_potential(rho_i, p, "quantum"), p.mass).values
    r41 = div41.values - G
    r41_flip = div41.values + G
    r44 = div44.values
    return {
        "res41": r41, "res44": r44,
        "diff_literal": float(np.abs(r41 - r44).max()),
        "diff_flipped": float(np.abs(r41_flip - r44).max()),
        "scale": float(np.abs(G).max()),
    }


def component_report(hist_rho: SpacetimeField, hist_v: SpacetimeField, p: PhysicalParams,
                     V: ScalarField | None, i: int | None = None) -> dict:
    """Tensor-derived component equations against the printed component forms.

    printed, beta=0:  d_t h - d_t[g^2 (P + rho c^2)] - d_x[g^2 (P + rho c^2) v]
    printed, beta=x:  d_x h + d_t[g^2 (P + rho c^2) v] + d_x[g^2 (P + rho c^2) v^2]
    """
    if i is None:
        i = hist_rho.values.shape[0] // 2
    g = hist_rho.grid
    c = p.c
    R0, Rx = tensor_divergence(hist_rho, hist_v, p, V, i)
    hs, A, Av, Avv = [], [], [], []
    for r, v in zip(hist_rho.values, hist_v.values):
        rf = ScalarField(g, r)
        h = enthalpy_density(rf, p, V).values
        a = _gamma2(v, c) * (p.kT * r / p.mass + r * c * c)
        hs.append(h); A.append(a); Av.append(a * v); Avv.append(a * v * v)
    sf = lambda arr: SpacetimeField(g, hist_rho.t0, hist_rho.dt, np.array(arr))
    dt_ = lambda arr: time_derivative(sf(arr), i, 1)
    dx_ = lambda f: deriv(f, g, 1)
    P0 = dt_(hs) - dt_(A) - dx_(Av[i])
    Px = dx_(hs[i]) + dt_(Av) + dx_(Avv[i])
    R0v, Rxv = R0.values, Rx.values
    hx = dx_(hs[i])
    scale0 = np.abs(c * R0v).max() + np.abs(dt_(A)).max()
    scalex = np.abs(Rxv).max() + np.abs(hx).max()
    return {
        "beta0_printed_plus_c_times_tensor": float(np.abs(P0 + c * R0v).max() / scale0),
        "beta0_printed_minus_c_times_tensor": float(np.abs(P0 - c * R0v).max() / scale0),
        "betax_printed_minus_tensor": float(np.abs(Px - Rxv).max() / scalex),
        "betax_inertia_scaled_by_c2": float(np.abs((Px - hx) - c * c * (Rxv - hx)).max()
                                            / (c * c * scalex)),
    }
