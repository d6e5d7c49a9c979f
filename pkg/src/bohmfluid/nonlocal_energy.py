"""Non-local free energy: kernels and their moments, the exact convolution
energy, its gradient truncation, the retarded version and the functional.

The module is named ``nonlocal_energy`` because ``nonlocal`` is a Python keyword.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special

from . import kernels as K
from .errors import ValidationError
from .fields import (TAIL_TOL, Grid1D, ScalarField, SpacetimeField, convolve_periodic, deriv,
                     check_interior, dalembertian, time_derivative)
from .params import PhysicalParams

SQRT2PI = np.sqrt(2 * np.pi)


class RepulsiveKernelError(ValidationError):
    pass


def _gauss(xi, sigma, dim):
    return np.exp(-0.5 * (xi / sigma) ** 2) / (SQRT2PI * sigma) ** dim


def _seg_moment(r, u, p):
    """Exact integral of r^p * (piecewise linear u) over the table."""
    r0, r1 = r[:-1], r[1:]
    beta = (u[1:] - u[:-1]) / (r1 - r0)
    alpha = u[:-1] - beta * r0
    return float(np.sum(alpha * (r1 ** (p + 1) - r0 ** (p + 1)) / (p + 1)
                        + beta * (r1 ** (p + 2) - r0 ** (p + 2)) / (p + 2)))


@dataclass(frozen=True)
class Kernel:
    """Radial interaction weight u.

    family "dog": u = A g(sigma1) - B g(sigma2), normalized Gaussians, A - B = 1.
    family "tabulated": radial samples ``u_tab`` on radii ``r_tab`` (uniform spacing
    ``dr``, starting at 0), linearly interpolated, zero beyond the last radius;
    rescaled on construction so that the integral is one.
    family "delta": unit mass in a single grid cell (identity convolution).
    ``scale`` dilates the kernel: u_s(x) = u(x/s)/s^dim.
    """
    family: str = "dog"
    A: float = 2.0
    sigma1: float = 1.0
    B: float = 1.0
    sigma2: float = 2.0
    dimension: int = 1
    scale: float = 1.0
    r_tab: np.ndarray | None = field(default=None, repr=False, compare=False)
    u_tab: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 3):
            raise ValidationError("kernel.dimension must be 1 or 3", keys=["kernel.dimension"])
        if not self.scale > 0:
            raise ValidationError("kernel.scale must be positive", keys=["kernel.scale"])
        if self.family == "dog":
            if abs(self.A - self.B - 1.0) > 1e-12:
                raise ValidationError(f"difference-of-Gaussians needs A - B = 1, got {self.A - self.B}",
                                      keys=["kernel.A", "kernel.B"])
            if not (self.sigma1 > 0 and (self.B == 0 or self.sigma2 > 0)):
                raise ValidationError("kernel widths must be positive", keys=["kernel.sigma1", "kernel.sigma2"])
        elif self.family == "tabulated":
            r = np.asarray(self.r_tab, float)
            u = np.asarray(self.u_tab, float)
            if r.ndim != 1 or r.shape != u.shape or r.size < 2:
                raise ValidationError("tabulated kernel needs matching 1D r_tab/u_tab arrays")
            dr = np.diff(r)
            if r[0] != 0 or not np.allclose(dr, dr[0], rtol=1e-9, atol=0) or dr[0] <= 0:
                raise ValidationError("tabulated kernel radii must start at 0 with uniform spacing")
            mass = self._tab_integral(r, u, 0)
            if not mass > 0:
                raise ValidationError("tabulated kernel has non-positive mass")
            object.__setattr__(self, "r_tab", r)
            object.__setattr__(self, "u_tab", u / mass)
        elif self.family != "delta":
            raise ValidationError(f"unknown kernel family {self.family!r}", keys=["kernel.family"])

    # radial integral with the dimension's measure: 1D counts both sides
    def _tab_integral(self, r, u, p):
        if self.dimension == 1:
            return 2 * _seg_moment(r, u, p)
        return 4 * np.pi * _seg_moment(r, u, p + 2)

    @property
    def dr(self):
        return None if self.r_tab is None else float(self.r_tab[1] - self.r_tab[0]) * self.scale

    def scaled(self, s: float) -> "Kernel":
        return replace(self, scale=self.scale * s)

    def __call__(self, xi):
        """Continuous profile u(|xi|) (1D: per unit length, 3D: per unit volume)."""
        xi = np.abs(np.asarray(xi, float))
        d, s = self.dimension, self.scale
        if self.family == "dog":
            out = self.A * _gauss(xi, s * self.sigma1, d)
            if self.B:
                out = out - self.B * _gauss(xi, s * self.sigma2, d)
            return out
        if self.family == "tabulated":
            rr = xi / s
            return np.interp(rr, self.r_tab, self.u_tab, right=0.0) * (rr <= self.r_tab[-1]) / s ** d
        raise ValidationError("delta kernel has no continuous profile")

    def tail_mass(self, R: float) -> float:
        """Mass of |u| outside radius R (1D only)."""
        s = self.scale
        if self.family == "dog":
            t = abs(self.A) * special.erfc(R / (np.sqrt(2) * s * self.sigma1))
            if self.B:
                t += abs(self.B) * special.erfc(R / (np.sqrt(2) * s * self.sigma2))
            return float(t)
        if self.family == "tabulated":
            rmax = self.r_tab[-1] * s
            if R >= rmax:
                return 0.0
            rr = np.linspace(R, rmax, 4001)
            return float(2 * np.trapezoid(np.abs(self(rr)), rr))
        return 0.0

    def weights(self, grid: Grid1D) -> np.ndarray:
        """Per-offset convolution weights on ``grid``, renormalized to sum 1."""
        if self.family == "delta":
            w = np.zeros(grid.n)
            w[0] = 1.0
            return w
        if self.dimension != 1:
            raise ValidationError("3D kernels only provide moments; sampling needs dimension 1")
        tail = self.tail_mass(0.5 * grid.length)
        if tail > TAIL_TOL:
            raise ValidationError(f"kernel tail mass {tail:.3e} outside L/2 exceeds {TAIL_TOL:g}; "
                                  f"enlarge the domain or shrink the kernel")
        w = self(grid.offsets()) * grid.dx
        return w / w.sum()

    def moment(self, p: int) -> float:
        """p-th radial moment in the kernel's dimension (adaptive quadrature)."""
        d, s = self.dimension, self.scale
        if self.family == "delta":
            return 1.0 if p == 0 else 0.0
        if self.family == "tabulated":
            return self._tab_integral(self.r_tab, self.u_tab, p) * s ** p
        meas = (lambda r: 2.0) if d == 1 else (lambda r: 4 * np.pi * r * r)
        total = 0.0
        for amp, sig in ((self.A, self.sigma1), (-self.B, self.sigma2)):
            if amp == 0:
                continue
            sg = s * sig
            val, _ = integrate.quad(lambda r: r ** p * _gauss(r, sg, d) * meas(r), 0, np.inf,
                                    epsabs=0, epsrel=1e-13, limit=200)
            total += amp * val
        return total


def kernel_second_moment(k: Kernel) -> float:
    """a^2 = -m2, with m2 the second moment in the kernel's own dimension.

    For dimension 3 the isotropic average gives int x_i x_j u d^3x = delta_ij m2/3;
    the value returned is the full m2 (no 1/3), see ``one_axis_second_moment``.
    """
    m2 = k.moment(2)
    if m2 >= 0:
        raise RepulsiveKernelError(f"repulsive kernel: second moment {m2:.6g} >= 0 (need attraction)")
    return -m2


def one_axis_second_moment(k: Kernel) -> float:
    """int x^2 u d^dx along one axis; equals m2 in 1D and m2/3 in 3D."""
    return k.moment(2) / k.dimension


# ---------------------------------------------------------------- energies

def clamp_log(rho, floor):
    return np.log(np.maximum(rho.values if isinstance(rho, ScalarField) else rho, floor))


def _V(V, grid):
    return np.zeros(grid.n) if V is None else (V.values if isinstance(V, ScalarField) else np.asarray(V))


def nonlocal_free_energy(rho: ScalarField, k: Kernel, V: ScalarField | None, kT: float,
                         rho_floor: float = 1e-12) -> ScalarField:
    g = rho.grid
    ln = ScalarField(g, clamp_log(rho, rho_floor))
    return ScalarField(g, kT * convolve_periodic(ln, k).values + _V(V, g))


def truncated_free_energy(rho: ScalarField, p: PhysicalParams, V: ScalarField | None,
                          method: str = "spectral") -> ScalarField:
    g = rho.grid
    ln = clamp_log(rho, p.rho_floor)
    lap = deriv(ln, g, 2, method)
    return ScalarField(g, p.kT * ln + _V(V, g) - 0.5 * p.kT * p.a ** 2 * lap)


def _retarded_stencils(hist: SpacetimeField, i: int, c: float, sign: int):
    """Base index and cubic weights for each spatial offset's delayed time."""
    m = hist.values.shape[0] - 1
    delay = np.abs(hist.grid.offsets()) / (c * hist.dt)    # in time steps
    s = i + sign * delay
    if s.min() < 0 or s.max() > m:
        need = int(np.ceil(delay.max()))
        side = "past" if sign < 0 else "future"
        raise ValidationError(f"insufficient history depth: evaluation at index {i} needs {need} "
                              f"{side} snapshots, history has {i if sign < 0 else m - i}")
    base = np.clip(np.floor(s).astype(np.int64) - 1, 0, m - 3)
    return base, K.lagrange4(s - base)


def retarded_free_energy(hist: SpacetimeField, k: Kernel, p: PhysicalParams, V: ScalarField | None,
                         i: int | None = None, mode: str = "retarded") -> ScalarField:
    """kT * sum_x' u(x-x') ln rho(x', t - |x-x'|/c) dx' + V at history index ``i``.

    ``mode="symmetric"`` averages the retarded and advanced sums.
    """
    if i is None:
        i = hist.values.shape[0] // 2
    if mode not in ("retarded", "symmetric", "advanced"):
        raise ValidationError(f"unknown retardation mode {mode!r}")
    g = hist.grid
    H = clamp_log(hist.values, p.rho_floor)
    w = k.weights(g)
    signs = {"retarded": (-1,), "advanced": (1,), "symmetric": (-1, 1)}[mode]
    acc = np.zeros(g.n)
    for sgn in signs:
        base, coef = _retarded_stencils(hist, i, p.c, sgn)
        acc += K.retarded_accumulate(H, w, base, coef)
    acc /= len(signs)
    return ScalarField(g, p.kT * acc + _V(V, g))


def truncated_retarded_correction(hist: SpacetimeField, p: PhysicalParams, i: int | None = None,
                                  form: str = "dalembertian") -> ScalarField:
    """Gradient-truncated non-local energy with finite signal speed.

    form "dalembertian": 0.5 kT a^2 (c^-2 d_tt - d_xx) ln rho (the covariant law).
    form "direct": 0.5 kT m2 (d_xx + c^-2 d_tt) ln rho with m2 = -a^2, the plain
    Taylor expansion of the retarded integral (symmetric mode).
    """
    if i is None:
        i = hist.values.shape[0] // 2
    check_interior(hist, i)
    ln = SpacetimeField(hist.grid, hist.t0, hist.dt, clamp_log(hist.values, p.rho_floor))
    pref = 0.5 * p.kT * p.a ** 2
    if form == "dalembertian":
        return ScalarField(hist.grid, pref * dalembertian(ln, p.c, i).values)
    if form == "direct":
        lxx = deriv(ln.values[i], hist.grid, 2)
        ltt = time_derivative(ln, i, 2)
        return ScalarField(hist.grid, -pref * (lxx + ltt / p.c ** 2))
    raise ValidationError(f"unknown correction form {form!r}")


def retarded_comparison_report(hist: SpacetimeField, p: PhysicalParams, i: int | None = None,
                               kernel: Kernel | None = None) -> dict:
    """Compare the D'Alembertian form with the direct expansion term by term.

    If ``kernel`` is given the exact symmetric retarded energy minus its local
    part is also measured against both forms.
    """
    if i is None:
        i = hist.values.shape[0] // 2
    g = hist.grid
    ln = SpacetimeField(g, hist.t0, hist.dt, clamp_log(hist.values, p.rho_floor))
    pref = 0.5 * p.kT * p.a ** 2
    lxx = deriv(ln.values[i], g, 2)
    ltt = time_derivative(ln, i, 2)
    m2 = -p.a ** 2
    space_dal, space_dir = -pref * lxx, 0.5 * p.kT * m2 * lxx
    time_dal, time_dir = pref * ltt / p.c ** 2, 0.5 * p.kT * m2 * ltt / p.c ** 2
    tmax = float(np.abs(time_dal).max())
    j = int(np.argmax(np.abs(time_dal)))
    rep = {
        "spatial_max_diff": float(np.abs(space_dal - space_dir).max()),
        "spatial_scale": float(np.abs(space_dal).max()),
        "time_term_max": tmax,
        "time_term_ratio": float(time_dir[j] / time_dal[j]) if tmax > 0 else float("nan"),
        "time_sum_max": float(np.abs(time_dal + time_dir).max()),
        "total_max_diff": float(np.abs(space_dal + time_dal - space_dir - time_dir).max()),
    }
    if kernel is not None:
        exact = retarded_free_energy(hist, kernel, p, None, i, "symmetric").values - p.kT * ln.values[i]
        rep["exact_vs_dalembertian"] = float(np.abs(exact - space_dal - time_dal).max())
        rep["exact_vs_direct"] = float(np.abs(exact - space_dir - time_dir).max())
        # time part alone: symmetric retarded minus instantaneous energy
        tpart = exact + p.kT * ln.values[i] - nonlocal_free_energy(hist.snapshot(i), kernel, None, p.kT).values
        rep["time_part_vs_dalembertian"] = float(np.abs(tpart - time_dal).max())
        rep["time_part_vs_direct"] = float(np.abs(tpart - time_dir).max())
    return rep


# ---------------------------------------------------------------- functional

def free_energy_functional(rho: ScalarField, p: PhysicalParams, V: ScalarField | None,
                           method: str = "spectral", form: str = "gradient") -> float:
    """Total energy sum rho (kT ln rho + V + 0.5 kT a^2 (d ln rho)^2) dx.

    ``form="laplacian"`` uses -0.5 kT a^2 d^2 ln rho instead of the squared
    gradient (the two agree after integration by parts).
    """
    g = rho.grid
    return float(_functional_batch(rho.values[None, :], g, p, _V(V, g), method, form)[0])


def _functional_batch(R, g, p, V, method, form):
    ln = np.log(np.maximum(R, p.rho_floor))
    dens = p.kT * ln + V
    if p.a:
        if form == "gradient":
            dens = dens + 0.5 * p.kT * p.a ** 2 * _batched_deriv(ln, g, 1, method) ** 2
        elif form == "laplacian":
            dens = dens - 0.5 * p.kT * p.a ** 2 * _batched_deriv(ln, g, 2, method)
        else:
            raise ValidationError(f"unknown functional form {form!r}")
    return np.sum(R * dens, axis=-1) * g.dx


def _batched_deriv(f, g, order, method):
    if method == "spectral":
        k = g.k
        mult = 1j * k if order == 1 else -(k ** 2)
        if order == 1:
            mult[g.n // 2] = 0
        return np.fft.ifft(mult * np.fft.fft(f, axis=-1), axis=-1).real
    r = lambda a, s: np.roll(a, s, axis=-1)
    dx = g.dx
    if order == 1:
        return (-r(f, -2) + 8 * r(f, -1) - 8 * r(f, 1) + r(f, 2)) / (12 * dx)
    return (-r(f, -2) + 16 * r(f, -1) - 30 * f + 16 * r(f, 1) - r(f, 2)) / (12 * dx * dx)


def functional_derivative_check(rho: ScalarField, p: PhysicalParams, V: ScalarField | None,
                                method: str = "spectral", rel_h: float = 1e-6) -> ScalarField:
    """Numeric dF/d rho_j by central single-cell bumps of size h = rel_h * max rho."""
    g = rho.grid
    r = rho.values
    h = rel_h * r.max()
    if r.min() - h < p.rho_floor:
        raise ValidationError(f"bump perturbation of size {h:.3g} drives rho below the floor "
                              f"{p.rho_floor:g} (min rho {r.min():.3g})")
    Vv = _V(V, g)
    eye = h * np.eye(g.n)
    # one row per bumped cell; derivatives act along the last axis
    plus = _functional_batch(r[None, :] + eye, g, p, Vv, method, "gradient")
    minus = _functional_batch(r[None, :] - eye, g, p, Vv, method, "gradient")
    num = (plus - minus) / (2 * h * g.dx)
    return ScalarField(g, num)


def mismatch_up_to_constant(a, b) -> float:
    """max|a - b - const| / max|b - mean b| with the mean offset removed."""
    a = a.values if isinstance(a, ScalarField) else np.asarray(a)
    b = b.values if isinstance(b, ScalarField) else np.asarray(b)
    d = a - b
    d = d - 0.5 * (d.max() + d.min())
    scale = np.abs(b - b.mean()).max()
    return float(np.abs(d).max() / scale) if scale > 0 else float(np.abs(d).max())
