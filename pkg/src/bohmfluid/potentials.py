"""Closed-form chemical potentials, the Bohm potential and the Korteweg force."""
import numpy as np

from .errors import ValidationError
from .fields import ScalarField, deriv
from .params import PhysicalParams


def _clamped(rho, p):
    return np.maximum(rho.values, p.rho_floor)


def _Vv(V, g):
    return np.zeros(g.n) if V is None else V.values


def mu_thermo(rho: ScalarField, p: PhysicalParams, V: ScalarField | None = None) -> ScalarField:
    # the constant +kT of the ideal-gas chemical potential is dropped
    return ScalarField(rho.grid, p.kT * np.log(_clamped(rho, p)) + _Vv(V, rho.grid))


def mu_nonlocal_log(rho: ScalarField, p: PhysicalParams, method: str = "spectral") -> ScalarField:
    """-kT a^2 [d^2 ln rho + (d ln rho)^2 / 2]."""
    g = rho.grid
    ln = np.log(_clamped(rho, p))
    return ScalarField(g, -p.kT * p.a ** 2 * (deriv(ln, g, 2, method) + 0.5 * deriv(ln, g, 1, method) ** 2))


def sqrt_curvature(rho: ScalarField, p: PhysicalParams, method: str = "spectral") -> np.ndarray:
    """d^2 sqrt(rho) / sqrt(rho) on the clamped density."""
    r = np.sqrt(_clamped(rho, p))
    return deriv(r, rho.grid, 2, method) / r


def bohm_potential(rho: ScalarField, p: PhysicalParams, form: str = "quantum",
                   method: str = "spectral") -> ScalarField:
    """Quantum potential in either of its two equivalent guises.

    quantum: -(hbar^2 / 2m) d^2 sqrt(rho) / sqrt(rho)
    thermal: -2 kT a^2 d^2 sqrt(rho) / sqrt(rho)
    """
    if form == "quantum":
        coef = -p.hbar ** 2 / (2 * p.mass)
    elif form == "thermal":
        coef = -2 * p.kT * p.a ** 2
    else:
        raise ValidationError(f"unknown Bohm potential form {form!r}")
    return ScalarField(rho.grid, coef * sqrt_curvature(rho, p, method))


def bohm_potential_log(rho: ScalarField, p: PhysicalParams, method: str = "fd4") -> ScalarField:
    """Quantum form written through ln rho; stays accurate in Gaussian tails."""
    g = rho.grid
    ln = np.log(np.maximum(rho.values, 1e-300))
    return ScalarField(g, -(p.hbar ** 2 / (2 * p.mass))
                       * (0.5 * deriv(ln, g, 2, method) + 0.25 * deriv(ln, g, 1, method) ** 2))


def thermal_length(p: PhysicalParams) -> float:
    """a = hbar / sqrt(4 m kT)."""
    if not p.kT > 0:
        raise ValidationError("thermal length needs kT > 0 (kT = 0 gives infinite length)",
                              keys=["physics.kT"])
    return p.hbar / np.sqrt(4 * p.mass * p.kT)


def korteweg_force(rho: ScalarField, p: PhysicalParams, method: str = "spectral") -> ScalarField:
    vq = bohm_potential(rho, p, "quantum", method)
    return ScalarField(rho.grid, -deriv(vq.values, rho.grid, 1, method))


def korteweg_force_explicit(rho: ScalarField, p: PhysicalParams, method: str = "spectral") -> ScalarField:
    """(hbar^2 / 2m) d[ d^2 sqrt(rho) / sqrt(rho) ], written out independently."""
    g = rho.grid
    r = np.sqrt(_clamped(rho, p))
    q = deriv(r, g, 2, method) / r
    return ScalarField(g, p.hbar ** 2 / (2 * p.mass) * deriv(q, g, 1, method))
