"""Geometry, contrast and overflow-safe scaled arithmetic.

The concentric-circle geometry is the disk ``B_R`` with the annulus
``r_i < r < r_e`` carrying the positive coefficient and the inner disk plus
the outer annulus carrying ``-mu``.  Mode formulas contain factors such as
``(r_e/r_i)**(2|m|)`` which leave the double range for large ``|m|``;
:class:`ScaledValue` keeps them as ``sign * mantissa * 2**exponent`` with an
unbounded integer exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering

DEFAULT_M_MAX = 64

# additions flush the smaller term when exponents differ by more than this
FLUSH_BITS = 100


class IndeflaError(Exception):
    """Base class for all domain errors raised by the package."""

    code = "indefla_error"


class GeometryError(IndeflaError, ValueError):
    code = "invalid_geometry"


class ContrastError(IndeflaError, ValueError):
    code = "invalid_contrast"


@dataclass(frozen=True)
class AnnularGeometry:
    """Radii ``0 < r_i < r_e < R`` of the two interface circles and the outer boundary."""

    r_i: float
    r_e: float
    R: float

    def __post_init__(self):
        for name in ("r_i", "r_e", "R"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise GeometryError(f"{name} must be a finite real, got {v!r}")
        if not (0 < self.r_i < self.r_e < self.R):
            raise GeometryError(
                f"radii must satisfy 0 < r_i < r_e < R, got "
                f"r_i={self.r_i}, r_e={self.r_e}, R={self.R}")

    @property
    def critical_radius(self) -> float:
        return critical_radius(self)

    def scaled(self, factor: float) -> "AnnularGeometry":
        return AnnularGeometry(self.r_i * factor, self.r_e * factor, self.R * factor)


def critical_radius(geom: AnnularGeometry) -> float:
    """Support radius ``r_e**2 / r_i`` separating sources in and out of the range at ``mu = 1``."""
    return geom.r_e ** 2 / geom.r_i


@dataclass(frozen=True)
class Contrast:
    mu: float
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ContrastError(f"mu must be positive, got {self.mu!r}")
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise ContrastError(f"delta must be nonnegative, got {self.delta!r}")

    @property
    def critical(self) -> bool:
        # exact comparison: near-critical contrasts are non-critical
        return self.mu == 1

    def coefficients(self) -> tuple[complex, complex, complex]:
        """Complex coefficients on (0, r_i), (r_i, r_e), (r_e, R)."""
        c_plus = complex(-self.mu, self.delta)
        return c_plus, complex(1.0, self.delta), c_plus


@total_ordering
@dataclass(frozen=True)
class ScaledValue:
    """Real number ``sign * mantissa * 2**exponent`` with mantissa in ``[1, 2)``.

    ``sign == 0`` encodes zero; mantissa and exponent are then ignored
    (normalized to 1.0 and 0).
    """

    sign: int
    mantissa: float = 1.0
    exponent: int = 0

    @classmethod
    def zero(cls) -> "ScaledValue":
        return cls(0, 1.0, 0)

    @classmethod
    def one(cls) -> "ScaledValue":
        return cls(1, 1.0, 0)

    @classmethod
    def from_float(cls, x: float) -> "ScaledValue":
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"cannot scale non-finite value {x!r}")
        if x == 0.0:
            return cls.zero()
        f, e = math.frexp(abs(x))
        return cls(1 if x > 0 else -1, 2.0 * f, e - 1)

    @classmethod
    def _make(cls, sign: int, mant: float, exp: int) -> "ScaledValue":
        # renormalize a positive mantissa of any (finite, nonzero) size
        if sign == 0 or mant == 0.0:
            return cls.zero()
        f, e = math.frexp(mant)
        return cls(sign, 2.0 * f, exp + e - 1)

    @classmethod
    def from_log2(cls, log2_value: float, sign: int = 1) -> "ScaledValue":
        e = math.floor(log2_value)
        return cls._make(sign, 2.0 ** (log2_value - e), int(e))

    def to_float(self) -> float:
        """Native float; raises ``OverflowError`` past the double range, underflows to 0."""
        if self.sign == 0:
            return 0.0
        if self.exponent > 1023:
            raise OverflowError(f"{self!r} exceeds the double range")
        if self.exponent < -1100:
            return 0.0
        return math.ldexp(self.sign * self.mantissa, self.exponent)

    def to_float_clamped(self) -> tuple[float, bool]:
        """``(value, overflowed)``; overflowing values clamp to +-``sys.float_info.max``."""
        try:
            return self.to_float(), False
        except OverflowError:
            return math.copysign(1.7976931348623157e308, self.sign), True

    def log2_abs(self) -> float:
        if self.sign == 0:
            return -math.inf
        return self.exponent + math.log2(self.mantissa)

    def __float__(self) -> float:
        return self.to_float()

    def __bool__(self) -> bool:
        return self.sign != 0

    def _coerce(self, other) -> "ScaledValue":
        if isinstance(other, ScaledValue):
            return other
        if isinstance(other, (int, float)):
            return ScaledValue.from_float(other)
        return NotImplemented

    def __neg__(self) -> "ScaledValue":
        return ScaledValue(-self.sign, self.mantissa, self.exponent)

    def __abs__(self) -> "ScaledValue":
        return ScaledValue(abs(self.sign), self.mantissa, self.exponent)

    def __mul__(self, other) -> "ScaledValue":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.sign == 0 or other.sign == 0:
            return ScaledValue.zero()
        return ScaledValue._make(self.sign * other.sign, self.mantissa * other.mantissa,
                                 self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScaledValue":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.sign == 0:
            raise ZeroDivisionError("division by scaled zero")
        if self.sign == 0:
            return ScaledValue.zero()
        return ScaledValue._make(self.sign * other.sign, self.mantissa / other.mantissa,
                                 self.exponent - other.exponent)

    def __rtruediv__(self, other) -> "ScaledValue":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __add__(self, other) -> "ScaledValue":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        big, small = (self, other) if self.exponent >= other.exponent else (other, self)
        shift = big.exponent - small.exponent
        if shift > FLUSH_BITS:
            return big
        total = big.sign * big.mantissa + small.sign * math.ldexp(small.mantissa, -shift)
        if total == 0.0:
            return ScaledValue.zero()
        return ScaledValue._make(1 if total > 0 else -1, abs(total), big.exponent)

    __radd__ = __add__

    def __sub__(self, other) -> "ScaledValue":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "ScaledValue":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __pow__(self, k: int) -> "ScaledValue":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return ScaledValue.one() / (self ** (-k))
        result = ScaledValue.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.sign == 0 or other.sign == 0:
            return self.sign == other.sign
        return (self.sign, self.mantissa, self.exponent) == (
            other.sign, other.mantissa, other.exponent)

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return (self - other).sign < 0

    def __hash__(self) -> int:
        return hash((self.sign, self.mantissa, self.exponent) if self.sign else 0)

    def __repr__(self) -> str:
        if self.sign == 0:
            return "ScaledValue(0)"
        return f"ScaledValue({self.sign * self.mantissa!r} * 2**{self.exponent})"


def scaled_ratio_pow(x: float, y: float, k: int) -> ScaledValue:
    """``(x/y)**k`` for positive ``x, y`` and integer ``k >= 0``, never overflowing."""
    if not (x > 0 and y > 0):
        raise ValueError(f"scaled_ratio_pow needs positive arguments, got {x!r}, {y!r}")
    if k < 0:
        raise ValueError(f"power must be nonnegative, got {k}")
    return ScaledValue.from_float(x / y) ** int(k)


def one_minus_ratio_pow(x: float, y: float, k: int) -> float:
    """``1 - (x/y)**k`` for ``0 < x < y`` without cancellation (the value lies in (0, 1])."""
    return -math.expm1(k * math.log(x / y))
