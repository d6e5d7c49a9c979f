from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ValidationError


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants shared by every module (dimensionless units).

    ``c = inf`` means instantaneous interaction (non-relativistic setting).
    ``hbar = 0`` is the classical limit; only the relativistic fluid accepts it.
    ``rho_floor`` clamps densities before log/sqrt and marks vacuum cells.
    """
    hbar: float = 1.0
    mass: float = 1.0
    kT: float = 0.0
    c: float = math.inf
    a: float = 0.0
    rho_floor: float = 1e-12

    def __post_init__(self):
        bad = []
        if not self.hbar >= 0:
            bad.append("physics.hbar")
        if not self.mass > 0:
            bad.append("physics.mass")
        if not self.kT >= 0:
            bad.append("physics.kT")
        if not self.c > 0:
            bad.append("physics.c")
        if not self.a >= 0:
            bad.append("physics.a")
        if not self.rho_floor > 0:
            bad.append("physics.rho_floor")
        if bad:
            raise ValidationError("invalid physical parameters: " + ", ".join(bad), keys=bad)

    def with_(self, **kw) -> "PhysicalParams":
        return replace(self, **kw)

    @property
    def relativistic(self) -> bool:
        return math.isfinite(self.c)
