"""Time the numba kernels against their numpy fallbacks and check they agree.

    python benchmarks/bench_kernels.py [--repeat 3]

Both flavours are called directly from ``bohmfluid.kernels``, so numba must be
installed (the env flag only changes which one the package dispatches to).
"""
import argparse
import time

import numpy as np

from bohmfluid import kernels as K
from bohmfluid.fields import Grid1D


def best_of(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        ts.append(time.perf_counter() - t0)
    return min(ts), out


def cases():
    g = Grid1D(512, 40.0)
    x = g.x
    rho = np.exp(-x ** 2 / 2) / np.sqrt(2 * np.pi)
    z = np.zeros(g.n)
    dt = 0.1 * g.dx ** 2
    yield ("madelung_rk4 N=512, 1000 steps",
           lambda f: f(rho, z, 0.0, z, 1.0, 1.0, 0.0, g.dx, 1e-12, dt, 1000, 10.0)[0],
           K.madelung_rk4_np, getattr(K, "madelung_rk4_nb", None))

    rng = np.random.default_rng(0)
    n = 200_000
    c = 10.0
    r = rng.uniform(0.5, 2.0, n)
    v = rng.uniform(-0.6, 0.6, n) * c
    kap = rng.uniform(-0.1, 0.1, n)
    g2 = 1 / (1 - (v / c) ** 2)
    E = r * (c * c * g2 - kap)
    M = r * g2 * v
    yield (f"recover_newton {n} points",
           lambda f: f(E, M, kap, 1.0, c, r * 1.01, 0.9 * v, 1e-12, 50)[0],
           K.recover_newton_np, getattr(K, "recover_newton_nb", None))

    m, nx = 400, 512
    H = rng.standard_normal((m, nx))
    w = np.exp(-np.linspace(-4, 4, nx) ** 2)
    w /= w.sum()
    base = rng.integers(0, m - 4, nx)
    coef = K.lagrange4(rng.uniform(0, 3, nx))
    yield ("retarded_accumulate 400x512",
           lambda f: f(H, w, base, coef),
           K.retarded_accumulate_np, getattr(K, "retarded_accumulate_nb", None))

    f0 = np.sin(x)
    pos = rng.uniform(-20, 20, 100_000)
    yield ("interp_cubic_periodic 1e5 points",
           lambda f: f(f0, x[0], g.dx, pos),
           K.interp_cubic_periodic_np, getattr(K, "interp_cubic_periodic_nb", None))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':36s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, call, f_np, f_nb in cases():
        t_np, out_np = best_of(lambda: call(f_np), args.repeat)
        if f_nb is None:
            print(f"{name:36s} {t_np:10.4f} {'n/a':>10s}")
            continue
        call(f_nb)   # compile
        t_nb, out_nb = best_of(lambda: call(f_nb), args.repeat)
        diff = float(np.abs(np.asarray(out_np) - np.asarray(out_nb)).max())
        print(f"{name:36s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
