"""Fixed-point arithmetic behind the controlled rotation.

Values are unsigned binary fractions held as Python integers (``raw``) with
a FixedPointFormat. Every routine truncates (floors) after each operation,
which is what a reversible shift-and-add circuit of that width produces.
The same routines are tabulated into basis-permutation oracles, so the
simulated circuit and the scalar path agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from qaop.errors import ConfigurationError, DomainError
from qaop.qsim import PermutationOracle, RegisterLayout

ARCSIN_Y_LIMIT = 0.9


@dataclass(frozen=True)
class FixedPointFormat:
    int_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.int_bits < 0 or self.frac_bits < 0 or self.total < 1:
            raise ConfigurationError(f"bad fixed-point format {self}")

    @property
    def total(self) -> int:
        return self.int_bits + self.frac_bits

    @property
    def max_raw(self) -> int:
        return (1 << self.total) - 1

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.frac_bits

    def to_raw(self, x: float) -> int:
        """Floor ``x`` onto the grid; raises when it does not fit."""
        raw = math.floor(x * (1 << self.frac_bits))
        if raw < 0 or raw > self.max_raw:
            raise ConfigurationError(f"{x!r} does not fit {self}")
        return raw

    def value(self, raw: int) -> float:
        return raw / (1 << self.frac_bits)


@dataclass(frozen=True)
class Fixed:
    raw: int
    fmt: FixedPointFormat

    @classmethod
    def from_float(cls, x: float, fmt: FixedPointFormat) -> "Fixed":
        return cls(fmt.to_raw(x), fmt)

    @property
    def value(self) -> float:
        return self.fmt.value(self.raw)

    def __float__(self) -> float:
        return self.value


def _rescale(raw: int, from_frac: int, to_frac: int) -> int:
    if to_frac >= from_frac:
        return raw << (to_frac - from_frac)
    return raw >> (from_frac - to_frac)


# ------------------------------------------------------------------ Newton


def newton_initial_guess(a: Fixed, fmt: FixedPointFormat) -> Fixed:
    """``2**-ceil(log2 a)``, the output of a priority encoder on ``a``.

    Underflows to zero when the exponent exceeds the fraction bits.
    """
    if a.raw < (1 << a.fmt.frac_bits):
        raise DomainError(f"reciprocal needs a >= 1, got {a.value}")
    e = (a.raw - 1).bit_length() - a.fmt.frac_bits
    e = max(e, 0)
    raw = 1 << (fmt.frac_bits - e) if e <= fmt.frac_bits else 0
    if raw > fmt.max_raw:
        raise ConfigurationError(f"initial guess {fmt.value(raw)} overflows {fmt}")
    return Fixed(raw, fmt)


def newton_step(z: Fixed, a: Fixed) -> Fixed:
    """One truncated step of ``z -> 2 z - a z**2``."""
    f, fa = z.fmt.frac_bits, a.fmt.frac_bits
    # exact value in units of 2**-(2f + fa), floored once back to 2**-f
    exact = (2 * z.raw << (f + fa)) - a.raw * z.raw * z.raw
    raw = max(exact, 0) >> (f + fa)
    return Fixed(min(raw, z.fmt.max_raw), z.fmt)


def newton_reciprocal(
    a: Fixed, s_prime: int, fmt: FixedPointFormat, *, trajectory: bool = False
):
    """Approximate ``1/a`` for ``a >= 1`` with ``s_prime`` Newton steps.

    The starting point is ``2**-ceil(log2 a)`` so that ``a * e0 < 1/2``.
    The result satisfies ``|z - 1/a| <= 2**-2**s' + s' 2**-d`` where ``d``
    is the fraction width of ``fmt`` (see newton_error_bound).
    """
    z = newton_initial_guess(a, fmt)
    steps = [z]
    for _ in range(s_prime):
        z = newton_step(z, a)
        steps.append(z)
    return steps if trajectory else z


def newton_error_bound(s_prime: int, d: int, a_max: float | None = None) -> float:
    """Iteration error ``2**-2**s'`` plus truncation error ``s' 2**-d``."""
    if s_prime < 1 or d < 1:
        raise ConfigurationError("newton_error_bound needs s' >= 1 and d >= 1")
    if a_max is not None and a_max < 1:
        raise DomainError("a_max must be at least 1")
    return 2.0 ** -(2**s_prime) + s_prime * 2.0**-d


# ---------------------------------------------------------- y and arcsin


def compute_y(z: Fixed, rho: float, lambda2: float, fmt: FixedPointFormat) -> Fixed:
    """``y = rho + rho * lambda2 * z`` floored onto ``fmt``.

    ``lambda2`` here is whatever scale multiplies ``z``; callers fold any
    register rescaling into it.
    """
    y = rho + rho * lambda2 * z.value
    raw = math.floor(y * (1 << fmt.frac_bits))
    if raw > fmt.max_raw or raw < 0:
        raise ConfigurationError(f"y = {y:.6g} overflows {fmt}")
    return Fixed(raw, fmt)


def arcsin_coefficients(n_terms: int) -> list[float]:
    """Taylor coefficients of arcsin: 1, 1/6, 3/40, 5/112, ..."""
    return [comb(2 * t, t) / (4**t * (2 * t + 1)) for t in range(n_terms)]


def arcsin_angle(y: Fixed, n_terms: int, fmt: FixedPointFormat) -> Fixed:
    """Truncated arcsin series in Horner form on ``fmt``.

    Every omitted term is positive, so the result never exceeds the true
    arcsin beyond the per-operation truncation.
    """
    if n_terms < 1:
        raise ConfigurationError("n_terms must be at least 1")
    if y.value < 0 or y.value > ARCSIN_Y_LIMIT:
        raise DomainError(f"arcsin series needs 0 <= y <= {ARCSIN_Y_LIMIT}, got {y.value}")
    f = fmt.frac_bits
    yr = _rescale(y.raw, y.fmt.frac_bits, f)
    y2 = (yr * yr) >> f
    coeffs = [math.floor(c * (1 << f)) for c in arcsin_coefficients(n_terms)]
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = ((acc * y2) >> f) + c
    theta = (acc * yr) >> f
    if theta > fmt.max_raw:
        raise ConfigurationError(f"angle {theta / (1 << f):.6g} overflows {fmt}")
    return Fixed(theta, fmt)


def arcsin_error_bound(y: float, n_terms: int, d: int) -> float:
    """Series tail plus truncation.

    The first omitted term alone underestimates the tail (at ``y = 0.5``
    with 4 terms it is 5.9e-5 against an actual 7.3e-5). Coefficients
    decrease, so the tail is at most ``c_n y**(2n+1) / (1 - y**2)``.
    """
    if not 0 <= y < 1:
        raise DomainError("arcsin_error_bound needs 0 <= y < 1")
    c = arcsin_coefficients(n_terms + 1)[-1]
    return c * y ** (2 * n_terms + 1) / (1 - y * y) + n_terms * 2.0**-d


# --------------------------------------------------------------- oracles


def block_sequence(s_prime: int, n_terms: int) -> tuple[str, ...]:
    """Arithmetic blocks composing the register-value -> angle map, in order."""
    blocks = ["mul", "newton-init"]
    blocks += ["square", "mul", "shift", "sub"] * s_prime
    blocks += ["mul-const", "add-const"]
    blocks += ["square"] + ["mul", "add-const"] * (n_terms - 1) + ["mul"]
    return tuple(blocks)


def xor_table_oracle(
    layout: RegisterLayout,
    inputs: tuple[str, ...],
    output: str,
    table: np.ndarray,
    *,
    kind: str,
    blocks=(),
) -> PermutationOracle:
    """``|x>|o> -> |x>|o XOR table[x]>``; self-inverse, hence always a bijection."""
    table = np.asarray(table, dtype=np.int64)

    def f(*vals):
        *ins, o = vals
        idx = ins[0] if len(ins) == 1 else np.ravel_multi_index(ins, table.shape)
        return (*ins, o ^ table.ravel()[idx])

    return PermutationOracle(layout, (*inputs, output), f, kind=kind, blocks=blocks)


def newton_table(fmt_in: FixedPointFormat, s_prime: int, fmt_out: FixedPointFormat) -> np.ndarray:
    """Raw Newton output for every raw input; inputs below 1 map to 0."""
    out = np.zeros(1 << fmt_in.total, dtype=np.int64)
    one = 1 << fmt_in.frac_bits
    for raw in range(one, 1 << fmt_in.total):
        out[raw] = newton_reciprocal(Fixed(raw, fmt_in), s_prime, fmt_out).raw
    return out


def newton_oracle(
    layout: RegisterLayout,
    input_reg: str,
    output_reg: str,
    fmt_in: FixedPointFormat,
    s_prime: int,
    fmt_out: FixedPointFormat,
) -> PermutationOracle:
    """Reversible Newton reciprocal from ``input_reg`` into ``output_reg``.

    Intermediate iterates are assumed computed and uncomputed inside the
    block, so any ancilla register is returned untouched.
    """
    if layout.width(input_reg) != fmt_in.total or layout.width(output_reg) != fmt_out.total:
        raise ConfigurationError("register widths do not match the formats")
    table = newton_table(fmt_in, s_prime, fmt_out)
    blocks = block_sequence(s_prime, 1)[1 : 2 + 4 * s_prime]
    return xor_table_oracle(layout, (input_reg,), output_reg, table, kind="NEWTON", blocks=blocks)
