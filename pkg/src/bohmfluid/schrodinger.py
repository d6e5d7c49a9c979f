"""Split-step Fourier Schrodinger integrator and the Madelung transform pair."""
import numpy as np

from .errors import ValidationError, VacuumError
from .fields import ComplexField, ScalarField
from .params import PhysicalParams


def ssfm_evolve(psi: ComplexField, Vcl: ScalarField | None, p: PhysicalParams, dt: float,
                steps: int) -> ComplexField:
    """Strang splitting: half potential kick, exact kinetic drift, half kick."""
    g = psi.grid
    V = np.zeros(g.n) if Vcl is None else Vcl.values
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if not p.hbar > 0:
        raise ValidationError("Schrodinger evolution needs hbar > 0", keys=["physics.hbar"])
    if dt * np.abs(V).max() / p.hbar > np.pi:
        raise ValidationError(f"phase aliasing: dt*max|V|/hbar = {dt * np.abs(V).max() / p.hbar:.3g} > pi")
    half = np.exp(-0.5j * dt * V / p.hbar)
    full = half * half
    kin = np.exp(-0.5j * p.hbar * dt * g.k ** 2 / p.mass)
    y = psi.values.copy()
    if steps == 0:
        return ComplexField(g, y)
    y *= half
    for s in range(steps):
        y = np.fft.ifft(kin * np.fft.fft(y))
        y *= full if s < steps - 1 else half
    return ComplexField(g, y)


def free_gaussian_density(x, t, sigma0=1.0, x0=0.0, hbar=1.0, m=1.0, k0=0.0):
    """Exact density of a free Gaussian packet psi0 ~ exp(-(x-x0)^2/(4 sigma0^2) + i k0 x)."""
    s2 = sigma0 ** 2 * (1 + (hbar * t / (2 * m * sigma0 ** 2)) ** 2)
    xc = x0 + hbar * k0 * t / m
    return np.exp(-(x - xc) ** 2 / (2 * s2)) / np.sqrt(2 * np.pi * s2)


def madelung_transform(psi: ComplexField, p: PhysicalParams | None = None, region=None):
    """(rho, S) with S = hbar * unwrapped phase, anchored at the left grid point.

    ``region`` (boolean mask) marks points where the phase must be defined; any
    vacuum point (|psi|^2 < rho_floor) inside it raises ``VacuumError``.
    """
    p = p or PhysicalParams()
    y = psi.values
    rho = np.abs(y) ** 2
    if region is not None:
        vac = np.asarray(region, bool) & (rho < p.rho_floor)
        if vac.any():
            j = int(np.flatnonzero(vac)[0])
            raise VacuumError(f"phase undefined: |psi|^2 = {rho[j]:.3g} below floor at x = {psi.grid.x[j]:.6g} "
                              f"({int(vac.sum())} vacuum points in region)")
    S = p.hbar * np.unwrap(np.angle(y))
    return ScalarField(psi.grid, rho, density=True), ScalarField(psi.grid, S)


def vacuum_mask(psi: ComplexField, p: PhysicalParams | None = None) -> np.ndarray:
    p = p or PhysicalParams()
    return np.abs(psi.values) ** 2 < p.rho_floor


def inverse_madelung(rho: ScalarField, S: ScalarField, p: PhysicalParams | None = None) -> ComplexField:
    p = p or PhysicalParams()
    if not p.hbar > 0:
        raise ValidationError("inverse_madelung needs hbar > 0", keys=["physics.hbar"])
    if rho.values.min() < 0:
        raise ValidationError("inverse_madelung needs rho >= 0")
    return ComplexField(rho.grid, np.sqrt(rho.values) * np.exp(1j * S.values / p.hbar))


def energy_expectation(psi: ComplexField, Vcl: ScalarField | None, p: PhysicalParams) -> float:
    g = psi.grid
    y = psi.values
    kin = np.sum(np.abs(np.fft.fft(y)) ** 2 * p.hbar ** 2 * g.k ** 2 / (2 * p.mass)) / g.n * g.dx
    pot = 0.0 if Vcl is None else np.sum(Vcl.values * np.abs(y) ** 2) * g.dx
    return float((kin + pot) / psi.norm())
