"""Hot loops, each with a numba version and a vectorized numpy version.

The public names at the bottom dispatch on ``_accel.HAVE_NUMBA``.  Both paths
implement the same arithmetic; they agree to round-off, not bit-for-bit.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit

STATUS_OK, STATUS_NONFINITE, STATUS_GROWTH = 0, 1, 2
VQ_LOG_FLOOR = 1e-300   # log clamp inside the quantum potential only
EXT_STRIDE = 2          # slope baseline for vacuum extrapolation


def lagrange4(u):
    """Weights of the cubic through nodes 0,1,2,3 evaluated at u (array ok)."""
    u = np.asarray(u, float)
    return np.stack([
        -(u - 1) * (u - 2) * (u - 3) / 6,
        u * (u - 2) * (u - 3) / 2,
        -u * (u - 1) * (u - 3) / 2,
        u * (u - 1) * (u - 2) / 6,
    ], axis=-1)


# =====================================================================
# Madelung right-hand side: FD4 derivatives, log-form quantum potential,
# Bernoulli energy extrapolated into vacuum cells.
# =====================================================================

def _fd1(f, dx):
    return (-np.roll(f, -2) + 8 * np.roll(f, -1) - 8 * np.roll(f, 1) + np.roll(f, 2)) / (12 * dx)


def _fd2(f, dx):
    return (-np.roll(f, -2) + 16 * np.roll(f, -1) - 30 * f
            + 16 * np.roll(f, 1) - np.roll(f, 2)) / (12 * dx * dx)


def active_mask(rho, thr):
    """Cells whose whole 5-point stencil sits above the vacuum threshold."""
    a0 = rho > thr
    return a0 & np.roll(a0, 1) & np.roll(a0, -1) & np.roll(a0, 2) & np.roll(a0, -2)


def extend_vacuum_np(E, act, st=EXT_STRIDE):
    n = E.size
    if act.all() or not act.any():
        return E
    idx = np.arange(n)
    a2 = np.concatenate([act, act])
    i2 = np.arange(2 * n)
    left = np.maximum.accumulate(np.where(a2, i2, -(10 ** 9)))[n:]
    right = np.minimum.accumulate(np.where(a2, i2, 10 ** 9)[::-1])[::-1][:n]
    dl = (idx + n - left).astype(float)
    dr = (right - idx).astype(float)
    lb, rb = left % n, right % n
    li, ri = (lb - st) % n, (rb + st) % n
    sl = np.where(act[li], (E[lb] - E[li]) / st, 0.0)
    sr = np.where(act[ri], (E[rb] - E[ri]) / st, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = dl / (dl + dr)
    w = s * s * s * (10 - 15 * s + 6 * s * s)
    out = E.copy()
    vac = ~act
    out[vac] = ((1 - w) * (E[lb] + sl * dl) + w * (E[rb] + sr * dr))[vac]
    return out


def madelung_rates_np(rho, Sp, gS, V, hbar, m, kT, dx, thr):
    v = (_fd1(Sp, dx) + gS) / m
    ell = np.log(np.maximum(rho, VQ_LOG_FLOOR))
    vq = -(hbar * hbar / (2 * m)) * (0.5 * _fd2(ell, dx) + 0.25 * _fd1(ell, dx) ** 2)
    E = 0.5 * m * v * v + V + vq
    if kT != 0.0:
        E = E + kT * ell
    E = extend_vacuum_np(E, active_mask(rho, thr))
    return -_fd1(rho * v, dx), -E


def madelung_rk4_np(rho, Sp, gS, V, hbar, m, kT, dx, thr, dt, nsteps, rho_cap):
    rho = rho.copy()
    Sp = Sp.copy()
    for step in range(nsteps):
        a1, b1 = madelung_rates_np(rho, Sp, gS, V, hbar, m, kT, dx, thr)
        a2, b2 = madelung_rates_np(rho + 0.5 * dt * a1, Sp + 0.5 * dt * b1, gS, V, hbar, m, kT, dx, thr)
        a3, b3 = madelung_rates_np(rho + 0.5 * dt * a2, Sp + 0.5 * dt * b2, gS, V, hbar, m, kT, dx, thr)
        a4, b4 = madelung_rates_np(rho + dt * a3, Sp + dt * b3, gS, V, hbar, m, kT, dx, thr)
        rn = rho + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        sn = Sp + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        if not (np.all(np.isfinite(rn)) and np.all(np.isfinite(sn))):
            return rho, Sp, STATUS_NONFINITE, step
        if rn.max() > rho_cap:
            return rho, Sp, STATUS_GROWTH, step
        rho, Sp = rn, sn
    return rho, Sp, STATUS_OK, nsteps


if HAVE_NUMBA:
    @njit(cache=True)
    def _madelung_rates_nb(rho, Sp, gS, V, hbar, m, kT, dx, thr, drho, dS, E, ell, flux, act0, act):
        n = rho.size
        c1 = 1.0 / (12.0 * dx)
        c2 = 1.0 / (12.0 * dx * dx)
        cq = -(hbar * hbar / (2.0 * m))
        for j in range(n):
            ell[j] = np.log(max(rho[j], VQ_LOG_FLOOR))
            act0[j] = rho[j] > thr
        nact = 0
        for j in range(n):
            jm2 = (j - 2) % n
            jm1 = (j - 1) % n
            jp1 = (j + 1) % n
            jp2 = (j + 2) % n
            v = ((-Sp[jp2] + 8.0 * Sp[jp1] - 8.0 * Sp[jm1] + Sp[jm2]) * c1 + gS) / m
            l1 = (-ell[jp2] + 8.0 * ell[jp1] - 8.0 * ell[jm1] + ell[jm2]) * c1
            l2 = (-ell[jp2] + 16.0 * ell[jp1] - 30.0 * ell[j] + 16.0 * ell[jm1] - ell[jm2]) * c2
            e = 0.5 * m * v * v + V[j] + cq * (0.5 * l2 + 0.25 * l1 * l1)
            if kT != 0.0:
                e += kT * ell[j]
            E[j] = e
            flux[j] = rho[j] * v
            a = act0[j] and act0[jm1] and act0[jp1] and act0[jm2] and act0[jp2]
            act[j] = a
            if a:
                nact += 1
        for j in range(n):
            drho[j] = -(-flux[(j + 2) % n] + 8.0 * flux[(j + 1) % n]
                        - 8.0 * flux[(j - 1) % n] + flux[(j - 2) % n]) * c1
        if nact == n or nact == 0:
            for j in range(n):
                dS[j] = -E[j]
            return
        st = EXT_STRIDE
        # distance to nearest active cell on each side (two ring sweeps)
        a0 = 0
        while not act[a0]:
            a0 += 1
        lb = np.empty(n, np.int64)
        dl = np.empty(n, np.int64)
        rb = np.empty(n, np.int64)
        dr = np.empty(n, np.int64)
        last = a0
        dist = 0
        for t in range(1, n + 1):
            j = (a0 + t) % n
            if act[j]:
                last = j
                dist = 0
            else:
                dist += 1
            lb[j] = last
            dl[j] = dist
        last = a0
        dist = 0
        for t in range(1, n + 1):
            j = (a0 - t) % n
            if act[j]:
                last = j
                dist = 0
            else:
                dist += 1
            rb[j] = last
            dr[j] = dist
        for j in range(n):
            if act[j]:
                dS[j] = -E[j]
                continue
            L = lb[j]
            R = rb[j]
            li = (L - st) % n
            ri = (R + st) % n
            sl = (E[L] - E[li]) / st if act[li] else 0.0
            sr = (E[R] - E[ri]) / st if act[ri] else 0.0
            s = dl[j] / (dl[j] + dr[j])
            w = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
            dS[j] = -((1.0 - w) * (E[L] + sl * dl[j]) + w * (E[R] + sr * dr[j]))

    @njit(cache=True)
    def _madelung_rk4_nb(rho, Sp, gS, V, hbar, m, kT, dx, thr, dt, nsteps, rho_cap):
        n = rho.size
        r = rho.copy()
        s = Sp.copy()
        rt = np.empty(n)
        stt = np.empty(n)
        k1 = np.empty(n); q1 = np.empty(n)
        k2 = np.empty(n); q2 = np.empty(n)
        k3 = np.empty(n); q3 = np.empty(n)
        k4 = np.empty(n); q4 = np.empty(n)
        E = np.empty(n); ell = np.empty(n); flux = np.empty(n)
        act0 = np.empty(n, np.bool_); act = np.empty(n, np.bool_)
        for step in range(nsteps):
            _madelung_rates_nb(r, s, gS, V, hbar, m, kT, dx, thr, k1, q1, E, ell, flux, act0, act)
            for j in range(n):
                rt[j] = r[j] + 0.5 * dt * k1[j]
                stt[j] = s[j] + 0.5 * dt * q1[j]
            _madelung_rates_nb(rt, stt, gS, V, hbar, m, kT, dx, thr, k2, q2, E, ell, flux, act0, act)
            for j in range(n):
                rt[j] = r[j] + 0.5 * dt * k2[j]
                stt[j] = s[j] + 0.5 * dt * q2[j]
            _madelung_rates_nb(rt, stt, gS, V, hbar, m, kT, dx, thr, k3, q3, E, ell, flux, act0, act)
            for j in range(n):
                rt[j] = r[j] + dt * k3[j]
                stt[j] = s[j] + dt * q3[j]
            _madelung_rates_nb(rt, stt, gS, V, hbar, m, kT, dx, thr, k4, q4, E, ell, flux, act0, act)
            bad = False
            big = False
            for j in range(n):
                rt[j] = r[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                stt[j] = s[j] + dt / 6.0 * (q1[j] + 2.0 * q2[j] + 2.0 * q3[j] + q4[j])
                if not (np.isfinite(rt[j]) and np.isfinite(stt[j])):
                    bad = True
                elif rt[j] > rho_cap:
                    big = True
            if bad:
                return r, s, STATUS_NONFINITE, step
            if big:
                return r, s, STATUS_GROWTH, step
            r[:] = rt
            s[:] = stt
        return r, s, STATUS_OK, nsteps

    def madelung_rates_nb(rho, Sp, gS, V, hbar, m, kT, dx, thr):
        n = rho.size
        drho = np.empty(n); dS = np.empty(n)
        _madelung_rates_nb(rho, Sp, float(gS), V, float(hbar), float(m), float(kT), float(dx), float(thr),
                           drho, dS, np.empty(n), np.empty(n), np.empty(n),
                           np.empty(n, np.bool_), np.empty(n, np.bool_))
        return drho, dS

    def madelung_rk4_nb(rho, Sp, gS, V, hbar, m, kT, dx, thr, dt, nsteps, rho_cap):
        return _madelung_rk4_nb(np.ascontiguousarray(rho, float), np.ascontiguousarray(Sp, float),
                                float(gS), np.ascontiguousarray(V, float), float(hbar), float(m),
                                float(kT), float(dx), float(thr), float(dt), int(nsteps), float(rho_cap))


# =====================================================================
# Retarded convolution: out[j] = sum_l w[l] * sum_q coef[l,q] * H[base[l]+q, j-l]
# =====================================================================

def retarded_accumulate_np(H, w, base, coef):
    n = H.shape[1]
    out = np.zeros(n)
    for l in np.flatnonzero(w):
        b = base[l]
        g = coef[l, 0] * H[b] + coef[l, 1] * H[b + 1] + coef[l, 2] * H[b + 2] + coef[l, 3] * H[b + 3]
        out += w[l] * np.roll(g, l)
    return out


if HAVE_NUMBA:
    @njit(cache=True)
    def _retarded_accumulate_nb(H, w, base, coef):
        n = H.shape[1]
        out = np.zeros(n)
        for l in range(n):
            wl = w[l]
            if wl == 0.0:
                continue
            b = base[l]
            c0 = coef[l, 0]; c1 = coef[l, 1]; c2 = coef[l, 2]; c3 = coef[l, 3]
            for j in range(n):
                src = (j - l) % n
                out[j] += wl * (c0 * H[b, src] + c1 * H[b + 1, src] + c2 * H[b + 2, src] + c3 * H[b + 3, src])
        return out

    def retarded_accumulate_nb(H, w, base, coef):
        return _retarded_accumulate_nb(np.ascontiguousarray(H, float), np.ascontiguousarray(w, float),
                                       np.ascontiguousarray(base, np.int64), np.ascontiguousarray(coef, float))


# =====================================================================
# Point-wise primitive recovery (Newton on rho, v) for the 1+1D fluid.
#   E = rho*(alpha c^2 g2 - kappa),  M = rho*alpha*g2*v,  g2 = 1/(1 - v^2/c^2)
# with alpha = 1 + kT/(m c^2) and kappa = (kT + q)/m, q frozen per point.
# =====================================================================

def _g2(v, c):
    return c * c / ((c - v) * (c + v))


def recover_newton_np(E, M, kappa, alpha, c, rho0, v0, tol=1e-12, maxit=50):
    rho = np.array(rho0, float, copy=True)
    v = np.array(v0, float, copy=True)
    n = rho.size
    its = np.full(n, -1, np.int64)
    live = np.ones(n, bool)
    for it in range(1, maxit + 1):
        r, vv, ka, Ei, Mi = rho[live], v[live], kappa[live], E[live], M[live]
        g2 = _g2(vv, c)
        f1 = r * (alpha * c * c * g2 - ka) - Ei
        f2 = r * alpha * g2 * vv - Mi
        dg2 = 2 * vv * g2 * g2 / (c * c)
        j11 = alpha * c * c * g2 - ka
        j12 = r * alpha * c * c * dg2
        j21 = alpha * g2 * vv
        j22 = r * alpha * (g2 + vv * dg2)
        det = j11 * j22 - j12 * j21
        with np.errstate(all="ignore"):
            drho = -(f1 * j22 - j12 * f2) / det
            dv = -(j11 * f2 - j21 * f1) / det
        lam = np.ones_like(r)
        ok = np.isfinite(drho) & np.isfinite(dv)
        for _ in range(60):
            rn = r + lam * drho
            vn = vv + lam * dv
            bad = ok & ((np.abs(vn) >= c) | (rn <= 0))
            if not bad.any():
                break
            lam = np.where(bad, 0.5 * lam, lam)
        # no admissible step: give up on the point (its stays -1)
        stuck = ~ok | bad
        rn = np.where(stuck, r, rn)
        vn = np.where(stuck, vv, vn)
        rho[live] = rn
        v[live] = vn
        # only a full Newton step counts as converged
        done = ~stuck & (lam == 1.0) & (np.abs(drho) <= tol * np.abs(rn)) & (np.abs(dv) <= tol * c)
        ids = np.flatnonzero(live)
        its[ids[done]] = it
        live[ids[done | stuck]] = False
        if not live.any():
            break
    return rho, v, its


if HAVE_NUMBA:
    @njit(cache=True, error_model="numpy")
    def _recover_newton_nb(E, M, kappa, alpha, c, rho0, v0, tol, maxit):
        n = E.size
        rho = rho0.copy()
        v = v0.copy()
        its = np.full(n, -1, np.int64)
        for j in range(n):
            r = rho[j]
            vv = v[j]
            for it in range(1, maxit + 1):
                g2 = c * c / ((c - vv) * (c + vv))
                f1 = r * (alpha * c * c * g2 - kappa[j]) - E[j]
                f2 = r * alpha * g2 * vv - M[j]
                dg2 = 2.0 * vv * g2 * g2 / (c * c)
                j11 = alpha * c * c * g2 - kappa[j]
                j12 = r * alpha * c * c * dg2
                j21 = alpha * g2 * vv
                j22 = r * alpha * (g2 + vv * dg2)
                det = j11 * j22 - j12 * j21
                dr = -(f1 * j22 - j12 * f2) / det
                dv = -(j11 * f2 - j21 * f1) / det
                if not (np.isfinite(dr) and np.isfinite(dv)):
                    break
                lam = 1.0
                admissible = False
                for _ in range(60):
                    if abs(vv + lam * dv) < c and r + lam * dr > 0.0:
                        admissible = True
                        break
                    lam *= 0.5
                if not admissible:
                    break
                r += lam * dr
                vv += lam * dv
                if lam == 1.0 and abs(dr) <= tol * abs(r) and abs(dv) <= tol * c:
                    its[j] = it
                    break
            rho[j] = r
            v[j] = vv
        return rho, v, its

    def recover_newton_nb(E, M, kappa, alpha, c, rho0, v0, tol=1e-12, maxit=50):
        f = lambda a: np.ascontiguousarray(a, float)
        return _recover_newton_nb(f(E), f(M), f(kappa), float(alpha), float(c), f(rho0), f(v0),
                                  float(tol), int(maxit))


# =====================================================================
# Periodic cubic (4-point Lagrange) interpolation at arbitrary positions.
# =====================================================================

def interp_cubic_periodic_np(f, x0, dx, pos):
    n = f.size
    s = (np.asarray(pos, float) - x0) / dx
    i = np.floor(s).astype(np.int64)
    w = lagrange4(s - i + 1.0)   # nodes i-1, i, i+1, i+2
    out = np.zeros(s.shape)
    for q in range(4):
        out += w[..., q] * f[(i - 1 + q) % n]
    return out


if HAVE_NUMBA:
    @njit(cache=True)
    def _interp_cubic_periodic_nb(f, x0, dx, pos):
        n = f.size
        out = np.empty(pos.size)
        for p in range(pos.size):
            s = (pos[p] - x0) / dx
            i = int(np.floor(s))
            u = s - i + 1.0
            w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
            w1 = u * (u - 2.0) * (u - 3.0) / 2.0
            w2 = -u * (u - 1.0) * (u - 3.0) / 2.0
            w3 = u * (u - 1.0) * (u - 2.0) / 6.0
            out[p] = (w0 * f[(i - 1) % n] + w1 * f[i % n]
                      + w2 * f[(i + 1) % n] + w3 * f[(i + 2) % n])
        return out

    def interp_cubic_periodic_nb(f, x0, dx, pos):
        pos = np.asarray(pos, float)
        return _interp_cubic_periodic_nb(np.ascontiguousarray(f, float), float(x0), float(dx),
                                         np.ascontiguousarray(pos.ravel())).reshape(pos.shape)


# ---------------------------------------------------------------- dispatch
if HAVE_NUMBA:
    madelung_rates = madelung_rates_nb
    madelung_rk4 = madelung_rk4_nb
    retarded_accumulate = retarded_accumulate_nb
    recover_newton = recover_newton_nb
    interp_cubic_periodic = interp_cubic_periodic_nb
else:
    madelung_rates = madelung_rates_np
    madelung_rk4 = madelung_rk4_np
    retarded_accumulate = retarded_accumulate_np
    recover_newton = recover_newton_np
    interp_cubic_periodic = interp_cubic_periodic_np
