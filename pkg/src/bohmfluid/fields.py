"""Periodic 1D grids, sampled fields and the differential operators on them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Grid1D:
    n: int
    length: float

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValidationError(f"grid.n must be a power of two >= 8, got {self.n}")
        if not (self.length > 0 and np.isfinite(self.length)):
            raise ValidationError(f"grid.length must be positive, got {self.length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dx)

    def offsets(self) -> np.ndarray:
        """Signed minimal periodic offset of each index from index 0."""
        j = np.arange(self.n)
        return self.dx * np.where(j <= self.n // 2, j, j - self.n)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScalarField:
    grid: Grid1D
    values: np.ndarray
    density: bool = False

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.n,):
            raise ValidationError(f"field has shape {v.shape}, grid needs ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValidationError(f"non-finite field value at index {bad} (x={self.grid.x[bad]:.6g})")
        if self.density and v.min() < 0:
            raise ValidationError(f"density field has negative value {v.min():.3g}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid, fn, density=False):
        return cls(grid, fn(grid.x), density)

    def with_values(self, values, density=None):
        return ScalarField(self.grid, values, self.density if density is None else density)

    def __len__(self):
        return self.grid.n


@dataclass(frozen=True)
class ComplexField:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values, complex)
        if v.shape != (self.grid.n,):
            raise ValidationError(f"field has shape {v.shape}, grid needs ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            raise ValidationError("non-finite wavefunction value")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)


@dataclass(frozen=True)
class SpacetimeField:
    """History of snapshots f(t_i, x_j) at uniform time stamps t_i = t0 + i*dt."""
    grid: Grid1D
    t0: float
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2 or v.shape[1] != self.grid.n:
            raise ValidationError(f"history must have shape (m+1, {self.grid.n}), got {v.shape}")
        if v.shape[0] < 5:
            raise ValidationError(f"history needs >= 5 snapshots, got {v.shape[0]}")
        if not self.dt > 0:
            raise ValidationError("history dt must be positive")
        if not np.all(np.isfinite(v)):
            raise ValidationError("non-finite value in history")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid, fn, t0, dt, count):
        t = t0 + dt * np.arange(count)
        return cls(grid, t0, dt, fn(grid.x[None, :], t[:, None]) + np.zeros((count, grid.n)))

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.values.shape[0])

    def snapshot(self, i) -> ScalarField:
        return ScalarField(self.grid, self.values[i])

    def index_of(self, t) -> int:
        i = int(round((t - self.t0) / self.dt))
        if abs(self.t0 + i * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValidationError(f"time {t} is not a history time stamp")
        return i


def values_of(f):
    return f.values if isinstance(f, (ScalarField, ComplexField, SpacetimeField)) else np.asarray(f)


# ---------------------------------------------------------------- derivatives

def d1_spectral(f, grid):
    ik = 1j * grid.k
    ik[grid.n // 2] = 0.0   # odd derivative: drop Nyquist
    return np.fft.ifft(ik * np.fft.fft(f)).real


def d2_spectral(f, grid):
    return np.fft.ifft(-grid.k ** 2 * np.fft.fft(f)).real


def d1_fd4(f, dx):
    return (-np.roll(f, -2) + 8 * np.roll(f, -1) - 8 * np.roll(f, 1) + np.roll(f, 2)) / (12 * dx)


def d2_fd4(f, dx):
    return (-np.roll(f, -2) + 16 * np.roll(f, -1) - 30 * f
            + 16 * np.roll(f, 1) - np.roll(f, 2)) / (12 * dx * dx)


def deriv(f, grid, order, method="spectral"):
    """Array-level derivative along a periodic grid (last axis)."""
    if order not in (1, 2):
        raise ValidationError(f"derivative order must be 1 or 2, got {order}")
    if method == "spectral":
        return d1_spectral(f, grid) if order == 1 else d2_spectral(f, grid)
    if method == "fd4":
        return d1_fd4(f, grid.dx) if order == 1 else d2_fd4(f, grid.dx)
    raise ValidationError(f"unknown derivative method {method!r}")


def spatial_derivative(f: ScalarField, order: int = 1, method: str = "spectral") -> ScalarField:
    v = values_of(f)
    if not np.all(np.isfinite(v)):
        raise ValidationError("spatial_derivative: non-finite input")
    return ScalarField(f.grid, deriv(v, f.grid, order, method))


def _time_d2(vals, i, dt):
    return (-vals[i - 2] + 16 * vals[i - 1] - 30 * vals[i]
            + 16 * vals[i + 1] - vals[i + 2]) / (12 * dt * dt)


def _time_d1(vals, i, dt):
    return (-vals[i + 2] + 8 * vals[i + 1] - 8 * vals[i - 1] + vals[i - 2]) / (12 * dt)


def check_interior(hist: SpacetimeField, i: int):
    m = hist.values.shape[0]
    if i < 2 or i > m - 3:
        raise ValidationError(f"time index {i} too close to history boundary (need 2 <= i <= {m - 3})")


def time_derivative(hist: SpacetimeField, i: int, order: int = 1) -> np.ndarray:
    check_interior(hist, i)
    return _time_d1(hist.values, i, hist.dt) if order == 1 else _time_d2(hist.values, i, hist.dt)


def dalembertian(hist: SpacetimeField, c: float, i: int | None = None) -> ScalarField:
    """(1/c^2) f_tt - f_xx at history index ``i`` (middle snapshot by default)."""
    if i is None:
        i = hist.values.shape[0] // 2
    check_interior(hist, i)
    ftt = _time_d2(hist.values, i, hist.dt)
    fxx = d2_spectral(hist.values[i], hist.grid)
    return ScalarField(hist.grid, ftt / c ** 2 - fxx)


# ---------------------------------------------------------------- convolution

TAIL_TOL = 1e-12


def convolve_periodic(f: ScalarField, kernel) -> ScalarField:
    """Circular convolution with the sampled, unit-mass kernel weights.

    ``kernel`` is anything with a ``weights(grid)`` method returning per-offset
    weights that already sum to one (see ``nonlocal_energy.Kernel``).
    """
    w = kernel.weights(f.grid)
    out = np.fft.irfft(np.fft.rfft(values_of(f)) * np.fft.rfft(w), n=f.grid.n)
    return ScalarField(f.grid, out)
