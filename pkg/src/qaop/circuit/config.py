"""Hyperparameters of one quantum AOP iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from qaop.circuit.arithmetic import ARCSIN_Y_LIMIT, FixedPointFormat
from qaop.errors import ConfigurationError

MODES = ("matrix", "gate")
COLUMN_BASES = ("right", "index")


@dataclass(frozen=True)
class IterationConfig:
    """Circuit parameters.

    ``t0=None`` selects ``2 pi (1 - 2**-b)``, which maps eigenvalue 1 to the
    top register value without wrapping. ``rho=None`` picks the largest
    normalization keeping every ancilla amplitude at most ``y_max``.
    ``y_max`` defaults to 1 in matrix mode and 0.5 in gate mode, where the
    truncated arcsin series needs headroom.
    """

    lambda2: float = 1e-3
    s: int = 1
    s_prime: int = 3
    b: int = 6
    d: int = 6
    p: int = 12
    t0: float | None = None
    rho: float | None = None
    y_max: float | None = None
    n_terms: int = 4
    mode: str = "matrix"
    column_basis: str = "right"
    qubit_budget: int = 24

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.column_basis not in COLUMN_BASES:
            raise ConfigurationError(f"column_basis must be one of {COLUMN_BASES}")
        for name in ("b", "d", "p", "n_terms", "qubit_budget"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.s < 0 or self.s_prime < 0:
            raise ConfigurationError("s and s_prime must be nonnegative")
        if self.lambda2 < 0:
            raise ConfigurationError("lambda2 must be nonnegative")
        if self.t0 is not None and self.t0 <= 0:
            raise ConfigurationError("t0 must be positive")
        if self.rho is not None and not 0 < self.rho <= 1:
            raise ConfigurationError("rho must lie in (0, 1]")
        ym = self.amplitude_cap
        if not 0 < ym <= 1:
            raise ConfigurationError("y_max must lie in (0, 1]")
        if self.mode == "gate" and ym > ARCSIN_Y_LIMIT:
            raise ConfigurationError(f"gate mode needs y_max <= {ARCSIN_Y_LIMIT}")

    @property
    def amplitude_cap(self) -> float:
        if self.y_max is not None:
            return self.y_max
        return 1.0 if self.mode == "matrix" else 0.5

    @property
    def evolution_time(self) -> float:
        if self.t0 is not None:
            return self.t0
        return 2 * math.pi * (1 - 2.0**-self.b)

    # register formats used by the gate-level arithmetic
    @property
    def product_format(self) -> FixedPointFormat:
        return FixedPointFormat(2 * self.b, 0)

    @property
    def reciprocal_format(self) -> FixedPointFormat:
        return FixedPointFormat(1, self.d)

    @property
    def y_format(self) -> FixedPointFormat:
        return FixedPointFormat(0, self.d)

    @property
    def theta_format(self) -> FixedPointFormat:
        # one integer bit only if the angle can reach 1 radian
        if math.asin(min(self.amplitude_cap, ARCSIN_Y_LIMIT)) < 1.0:
            return FixedPointFormat(0, self.d)
        return FixedPointFormat(1, self.d - 1)

    def with_(self, **kwargs) -> "IterationConfig":
        return replace(self, **kwargs)
