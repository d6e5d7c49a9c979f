import os
import subprocess
import sys

import numpy as np
import pytest

from bohmfluid import _accel
from bohmfluid import kernels as K

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not active")


def test_env_flag_selects_numpy():
    code = "from bohmfluid import _accel, kernels; print(_accel.backend(), kernels.madelung_rk4.__name__)"
    env = dict(os.environ, BOHMFLUID_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "madelung_rk4_np"]


def _state():
    n = 128
    dx = 40.0 / n
    x = -20 + dx * np.arange(n)
    rho = np.exp(-x ** 2 / 2) / np.sqrt(2 * np.pi)
    S = 0.3 * np.sin(2 * np.pi * x / 40)
    V = 0.5 * (0.1 * x) ** 2
    return rho, S, V, dx


@needs_numba
def test_madelung_kernels_agree():
    rho, S, V, dx = _state()
    a = K.madelung_rates_np(rho, S, 0.0, V, 1.0, 1.0, 0.1, dx, 1e-12)
    b = K.madelung_rates_nb(rho, S, 0.0, V, 1.0, 1.0, 0.1, dx, 1e-12)
    assert np.allclose(a[0], b[0], atol=1e-14) and np.allclose(a[1], b[1], atol=1e-12)
    ra = K.madelung_rk4_np(rho, S, 0.0, V, 1.0, 1.0, 0.1, dx, 1e-12, 1e-3, 200, 10.0)
    rb = K.madelung_rk4_nb(rho, S, 0.0, V, 1.0, 1.0, 0.1, dx, 1e-12, 1e-3, 200, 10.0)
    assert ra[2] == rb[2] == K.STATUS_OK and ra[3] == rb[3] == 200
    assert np.abs(ra[0] - rb[0]).max() < 1e-13 and np.abs(ra[1] - rb[1]).max() < 1e-10


@needs_numba
def test_recovery_and_interp_kernels_agree(rng):
    n, c = 500, 7.0
    r = rng.uniform(0.2, 2, n)
    v = rng.uniform(-0.95, 0.95, n) * c
    kap = rng.uniform(-0.3, 0.3, n)
    g2 = 1 / (1 - (v / c) ** 2)
    E, M = r * (c * c * g2 - kap), r * g2 * v
    a = K.recover_newton_np(E, M, kap, 1.0, c, r * 1.1, 0 * v)
    b = K.recover_newton_nb(E, M, kap, 1.0, c, r * 1.1, 0 * v)
    assert np.array_equal(a[2] >= 0, b[2] >= 0)
    assert np.allclose(a[0], b[0], rtol=1e-12) and np.allclose(a[1], b[1], rtol=1e-12, atol=1e-12)
    f = np.sin(np.linspace(0, 2 * np.pi, 64, endpoint=False))
    pos = rng.uniform(-3, 10, 300)
    assert np.allclose(K.interp_cubic_periodic_np(f, 0.0, 0.1, pos), K.interp_cubic_periodic_nb(f, 0.0, 0.1, pos))


def test_lagrange_weights_reproduce_cubics():
    u = np.linspace(0, 3, 13)
    w = K.lagrange4(u)
    for p in range(4):
        assert np.allclose(w @ (np.arange(4.0) ** p), u ** p)
