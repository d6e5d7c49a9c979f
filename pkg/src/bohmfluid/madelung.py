"""Madelung hydrodynamics: continuity plus the quantum Hamilton-Jacobi equation
for (rho, S), the Bernoulli energy field and Bohmian trajectories.

Numerics (default ``method="fd4"``):
  * fourth-order central differences for every spatial derivative;
  * the quantum potential in log form, -(hbar^2/2m)(l''/2 + l'^2/4) with l = ln rho,
    which is exact on Gaussian tails where sqrt(rho) underflows;
  * continuity in flux form -d(rho v), unclamped rho, so mass is conserved to
    round-off;
  * cells whose stencil touches rho <= rho_floor are vacuum: there the Bernoulli
    energy is extrapolated linearly from the nearest active cells on both sides
    and blended smoothly across the gap.
``method="spectral"`` is the textbook pseudo-spectral scheme; it is only usable
for states without vacuum (e.g. densities on a uniform background).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .errors import NumericalAbort, ValidationError
from .fields import Grid1D, ScalarField, deriv
from .params import PhysicalParams


@dataclass(frozen=True)
class MadelungState:
    rho: ScalarField
    S: ScalarField
    time: float = 0.0

    def __post_init__(self):
        if self.rho.grid != self.S.grid:
            raise ValidationError("rho and S live on different grids")

    @property
    def grid(self) -> Grid1D:
        return self.rho.grid

    @classmethod
    def from_arrays(cls, grid, rho, S, time=0.0):
        return cls(ScalarField(grid, rho), ScalarField(grid, S), time)

    def mass(self) -> float:
        return float(self.rho.values.sum() * self.grid.dx)

    def velocity(self, p: PhysicalParams, method="fd4") -> np.ndarray:
        Sp, gS = split_winding(self.S.values, self.grid, p.hbar)
        return (deriv(Sp, self.grid, 1, method) + gS) / p.mass


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray          # (len(times), n_seeds)
    flagged: np.ndarray = field(default=None)   # seeds starting in vacuum


def split_winding(S, grid, hbar):
    """S = Sp + gS (x - x0) with Sp periodic and gS = 2 pi hbar w / L, w integer.

    Non-integer phase drift across the seam is left in Sp (a plain periodic jump).
    """
    if not hbar > 0:
        raise ValidationError("phase winding needs hbar > 0", keys=["physics.hbar"])
    jump = (S[-1] - S[0]) * grid.n / (grid.n - 1)   # estimate of S(x0+L) - S(x0)
    w = round(jump / (2 * np.pi * hbar))
    gS = 2 * np.pi * hbar * w / grid.length
    return S - gS * (grid.x - grid.x[0]), gS


def _V(V, g):
    return np.zeros(g.n) if V is None else V.values


def _rates_spectral(rho, Sp, gS, V, p, g):
    v = (deriv(Sp, g, 1) + gS) / p.mass
    r = np.maximum(rho, p.rho_floor)
    sq = np.sqrt(r)
    vq = -(p.hbar ** 2 / (2 * p.mass)) * deriv(sq, g, 2) / sq
    E = 0.5 * p.mass * v * v + p.kT * np.log(r) + V + vq
    return -deriv(rho * v, g, 1), -E


def madelung_rhs(st: MadelungState, p: PhysicalParams, V: ScalarField | None = None,
                 method: str = "fd4"):
    """(d rho/dt, dS/dt) as ScalarFields."""
    g = st.grid
    _need_hbar(p)
    Sp, gS = split_winding(st.S.values, g, p.hbar)
    if method == "fd4":
        a, b = K.madelung_rates(st.rho.values, Sp, gS, _V(V, g), p.hbar, p.mass, p.kT, g.dx, p.rho_floor)
    elif method == "spectral":
        a, b = _rates_spectral(st.rho.values, Sp, gS, _V(V, g), p, g)
    else:
        raise ValidationError(f"unknown Madelung method {method!r}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NumericalAbort("non-finite Madelung rate", state=st)
    return ScalarField(g, a), ScalarField(g, b)


def _need_hbar(p):
    if not p.hbar > 0:
        raise ValidationError("Madelung evolution needs hbar > 0", keys=["physics.hbar"])


def default_dt(grid: Grid1D, p: PhysicalParams) -> float:
    _need_hbar(p)
    return 0.1 * p.mass * grid.dx ** 2 / p.hbar


def _rk4_spectral(rho, Sp, gS, V, p, g, dt, nsteps, cap):
    for step in range(nsteps):
        a1, b1 = _rates_spectral(rho, Sp, gS, V, p, g)
        a2, b2 = _rates_spectral(rho + 0.5 * dt * a1, Sp + 0.5 * dt * b1, gS, V, p, g)
        a3, b3 = _rates_spectral(rho + 0.5 * dt * a2, Sp + 0.5 * dt * b2, gS, V, p, g)
        a4, b4 = _rates_spectral(rho + dt * a3, Sp + dt * b3, gS, V, p, g)
        rn = rho + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        sn = Sp + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        if not (np.all(np.isfinite(rn)) and np.all(np.isfinite(sn))):
            return rho, Sp, K.STATUS_NONFINITE, step
        if rn.max() > cap:
            return rho, Sp, K.STATUS_GROWTH, step
        rho, Sp = rn, sn
    return rho, Sp, K.STATUS_OK, nsteps


def integrate(st: MadelungState, p: PhysicalParams, V: ScalarField | None, t_end: float,
              dt: float | None = None, stride: int = 10, method: str = "fd4",
              callback=None) -> list[MadelungState]:
    """Classic RK4 from st.time to t_end; returns snapshots every ``stride`` steps
    (first and last always included).  ``callback(state)`` sees each snapshot.
    """
    g = st.grid
    _need_hbar(p)
    if not t_end > st.time:
        raise ValidationError(f"t_end ({t_end}) must exceed the start time ({st.time})")
    if stride < 1:
        raise ValidationError("stride must be >= 1")
    dt0 = default_dt(g, p) if dt is None else float(dt)
    nsteps = int(np.ceil((t_end - st.time) / dt0 - 1e-9))
    dt = (t_end - st.time) / nsteps
    Vv = np.ascontiguousarray(_V(V, g), float)
    rho = np.ascontiguousarray(st.rho.values, float)
    Sp, gS = split_winding(st.S.values, g, p.hbar)
    ramp = gS * (g.x - g.x[0])
    cap = 10.0 * rho.max()
    out = [st]
    if callback:
        callback(st)
    done = 0
    while done < nsteps:
        chunk = min(stride, nsteps - done)
        if method == "fd4":
            rho, Sp, status, k = K.madelung_rk4(rho, Sp, gS, Vv, p.hbar, p.mass, p.kT, g.dx,
                                                p.rho_floor, dt, chunk, cap)
        elif method == "spectral":
            rho, Sp, status, k = _rk4_spectral(rho, Sp, gS, Vv, p, g, dt, chunk, cap)
        else:
            raise ValidationError(f"unknown Madelung method {method!r}")
        if status != K.STATUS_OK:
            last = MadelungState.from_arrays(g, rho, Sp + ramp, st.time + (done + k) * dt)
            why = "non-finite value" if status == K.STATUS_NONFINITE else "density grew beyond 10x its initial maximum"
            raise NumericalAbort(f"Madelung integration aborted at t={last.time:.6g}: {why}", state=last,
                                 diagnostics={"step": done + k, "dt": dt, "t": last.time, "reason": why})
        done += chunk
        snap = MadelungState.from_arrays(g, rho, Sp + ramp, st.time + done * dt)
        out.append(snap)
        if callback:
            callback(snap)
    return out


def total_energy_field(st: MadelungState, p: PhysicalParams, V: ScalarField | None = None,
                       method: str = "fd4") -> ScalarField:
    """Bernoulli field m v^2/2 + kT ln rho + V + V_Q (no vacuum extension)."""
    g = st.grid
    v = st.velocity(p, method)
    if method == "fd4":
        ln = np.log(np.maximum(st.rho.values, K.VQ_LOG_FLOOR))
        vq = -(p.hbar ** 2 / (2 * p.mass)) * (0.5 * deriv(ln, g, 2, "fd4") + 0.25 * deriv(ln, g, 1, "fd4") ** 2)
        lnc = np.log(np.maximum(st.rho.values, p.rho_floor))
    else:
        r = np.maximum(st.rho.values, p.rho_floor)
        sq = np.sqrt(r)
        vq = -(p.hbar ** 2 / (2 * p.mass)) * deriv(sq, g, 2) / sq
        lnc = np.log(r)
    return ScalarField(g, 0.5 * p.mass * v * v + p.kT * lnc + _V(V, g) + vq)


def bohmian_trajectories(solution: list[MadelungState], seeds, p: PhysicalParams,
                         method: str = "fd4") -> Trajectory:
    """Integrate dx/dt = v(x, t) with RK4 between stored snapshots.

    v is interpolated cubically in space and with a cubic Lagrange stencil in time,
    so the RK4 half-steps see an O(dt^4)-accurate velocity.  Positions wrap.
    """
    if len(solution) < 2:
        raise ValidationError("need at least two snapshots")
    g = solution[0].grid
    times = np.array([s.time for s in solution])
    dts = np.diff(times)
    seeds = np.atleast_1d(np.asarray(seeds, float))
    vel = np.array([s.velocity(p, method) for s in solution])
    rho0 = solution[0].rho.values
    flagged = K.interp_cubic_periodic(rho0, g.x[0], g.dx, seeds) < 1e-8
    L, x0 = g.length, g.x[0]

    def vat(t, xs):
        m = len(times)
        i = int(np.clip(np.searchsorted(times, t) - 2, 0, max(m - 4, 0)))
        if m < 4:
            # linear in time when too few snapshots for a cubic
            j = min(int(np.searchsorted(times, t, "right")) - 1, m - 2)
            th = (t - times[j]) / (times[j + 1] - times[j])
            return ((1 - th) * K.interp_cubic_periodic(vel[j], x0, g.dx, xs)
                    + th * K.interp_cubic_periodic(vel[j + 1], x0, g.dx, xs))
        tn = times[i:i + 4]
        w = [np.prod([(t - tn[r]) / (tn[q] - tn[r]) for r in range(4) if r != q]) for q in range(4)]
        return sum(w[q] * K.interp_cubic_periodic(vel[i + q], x0, g.dx, xs) for q in range(4))

    pos = np.empty((len(times), seeds.size))
    pos[0] = seeds
    xs = seeds.copy()
    for n, h in enumerate(dts):
        t = times[n]
        k1 = vat(t, xs)
        k2 = vat(t + h / 2, xs + h / 2 * k1)
        k3 = vat(t + h / 2, xs + h / 2 * k2)
        k4 = vat(t + h, xs + h * k3)
        xs = xs + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        xs = (xs - x0) % L + x0
        pos[n + 1] = xs
    return Trajectory(times, pos, flagged)
