"""Per-mode Dirichlet-to-Neumann blocks on the two interface circles.

Every operator on ``Sigma = S_{r_i} u S_{r_e}`` that commutes with rotations
acts on the Fourier mode ``m`` as a 2x2 matrix.  Row/column 0 is the inner
circle, row/column 1 the outer one.  Entries are held as
:class:`~indefla.core.ScaledValue` so that ``(r_e/r_i)**|m|`` factors never
overflow; conversion to floats happens only in :meth:`ModeMatrix.to_array`.

Normal derivatives follow the outward normals of the respective region:
``-d/dr`` on ``S_{r_i}`` and ``+d/dr`` on ``S_{r_e}`` for the annulus,
``+d/dr`` on ``S_{r_i}`` and ``-d/dr`` on ``S_{r_e}`` for the complement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core import AnnularGeometry, IndeflaError, ScaledValue, one_minus_ratio_pow, scaled_ratio_pow

KINDS = ("InteriorDtN", "ExteriorDtN", "Difference", "DifferenceInverse", "Theta", "Psi")

_ZERO = ScaledValue.zero()
_ONE = ScaledValue.one()
S = ScaledValue.from_float


class SingularModeError(IndeflaError, ArithmeticError):
    code = "singular_mode"


@dataclass(frozen=True)
class ModeMatrix:
    m: int
    kind: str
    entries: tuple  # ((e11, e12), (e21, e22)) of ScaledValue

    def __getitem__(self, ij) -> ScaledValue:
        i, j = ij
        return self.entries[i][j]

    def to_array(self) -> np.ndarray:
        return np.array([[e.to_float() for e in row] for row in self.entries])

    def to_array_clamped(self) -> tuple[np.ndarray, bool]:
        vals = [[e.to_float_clamped() for e in row] for row in self.entries]
        arr = np.array([[v for v, _ in row] for row in vals])
        return arr, any(o for row in vals for _, o in row)

    def normalized(self) -> tuple[np.ndarray, int]:
        """``(A, e)`` with ``self == A * 2**e`` and ``max |A| in [1, 2)``."""
        e = max((x.exponent for row in self.entries for x in row if x.sign), default=0)
        shift = ScaledValue(1, 1.0, -e)
        return np.array([[(x * shift).to_float() for x in row] for row in self.entries]), e

    def matmul(self, other: "ModeMatrix", kind: str | None = None) -> "ModeMatrix":
        a, b = self.entries, other.entries
        out = tuple(tuple(a[i][0] * b[0][j] + a[i][1] * b[1][j] for j in range(2)) for i in range(2))
        return ModeMatrix(self.m, kind or self.kind, out)

    def scale_columns(self, c0, c1, kind: str) -> "ModeMatrix":
        c0, c1 = _sv(c0), _sv(c1)
        (a, b), (c, d) = self.entries
        return ModeMatrix(self.m, kind, ((a * c0, b * c1), (c * c0, d * c1)))

    def scale_rows(self, c0, c1, kind: str) -> "ModeMatrix":
        c0, c1 = _sv(c0), _sv(c1)
        (a, b), (c, d) = self.entries
        return ModeMatrix(self.m, kind, ((a * c0, b * c0), (c * c1, d * c1)))

    def determinant(self) -> ScaledValue:
        (a, b), (c, d) = self.entries
        return a * d - b * c


def _sv(x) -> ScaledValue:
    return x if isinstance(x, ScaledValue) else S(x)


def _mat(m, kind, e11, e12, e21, e22) -> ModeMatrix:
    conv = [_sv(x) for x in (e11, e12, e21, e22)]
    return ModeMatrix(m, kind, ((conv[0], conv[1]), (conv[2], conv[3])))


@dataclass(frozen=True)
class LambdaBlock:
    """Mode weights of ``sqrt(-Laplace_Sigma + 1)`` on the two circles."""

    m: int
    w_i: float
    w_e: float


def lambda_block(geom: AnnularGeometry, m: int) -> LambdaBlock:
    k = abs(m)
    return LambdaBlock(m, math.sqrt((k / geom.r_i) ** 2 + 1.0), math.sqrt((k / geom.r_e) ** 2 + 1.0))


@lru_cache(maxsize=4096)
def _ratios(geom: AnnularGeometry, k: int):
    # t = (r_i/r_e)^(2k), v = (r_e/R)^(2k) and their complements, plus (r_i/r_e)^k
    t = scaled_ratio_pow(geom.r_i, geom.r_e, 2 * k)
    v = scaled_ratio_pow(geom.r_e, geom.R, 2 * k)
    one_t = S(one_minus_ratio_pow(geom.r_i, geom.r_e, 2 * k))
    one_v = S(one_minus_ratio_pow(geom.r_e, geom.R, 2 * k))
    s = scaled_ratio_pow(geom.r_i, geom.r_e, k)
    return t, v, one_t, one_v, s


@lru_cache(maxsize=256)
def _log_defect(geom: AnnularGeometry) -> float:
    """``ln(r_i R / r_e^2)``, exact up to one rounding for the given float radii.

    It vanishes when ``R`` equals the critical radius, where ``D_m`` has an
    exactly zero corner entry; forming the ratio in floating point first
    would leave a spurious value of relative size ``k * eps``.
    """
    num = Fraction(geom.r_i) * Fraction(geom.R)
    den = Fraction(geom.r_e) ** 2
    return math.log1p(float((num - den) / den))


def _expm1_scaled(x: float) -> ScaledValue:
    if x < 700:
        return S(math.expm1(x))
    return ScaledValue.from_log2(x / math.log(2.0)) - 1


def interior_dtn_mode(geom: AnnularGeometry, m: int) -> ModeMatrix:
    """Dirichlet-to-Neumann block ``B_m`` of the annulus ``r_i < r < r_e``."""
    return _with_m(_interior(geom, abs(m)), m)


def _with_m(mat: ModeMatrix, m: int) -> ModeMatrix:
    return mat if mat.m == m else ModeMatrix(m, mat.kind, mat.entries)


@lru_cache(maxsize=4096)
def _interior(geom: AnnularGeometry, k: int) -> ModeMatrix:
    ri, re = geom.r_i, geom.r_e
    if k == 0:
        lq = math.log(re / ri)
        return _mat(0, "InteriorDtN", 1 / (ri * lq), -1 / (ri * lq), -1 / (re * lq), 1 / (re * lq))
    t, _, one_t, _, s = _ratios(geom, k)
    coth = (1 + t) / one_t
    csch2 = 2 * s / one_t  # 2 / (q^k - q^-k)
    return _mat(k, "InteriorDtN", coth * (k / ri), -csch2 * (k / ri), -csch2 * (k / re), coth * (k / re))


def exterior_dtn_mode(geom: AnnularGeometry, m: int) -> ModeMatrix:
    """Dirichlet-to-Neumann block ``C_m`` of the inner disk and outer annulus (zero data on ``S_R``)."""
    return _with_m(_exterior(geom, abs(m)), m)


@lru_cache(maxsize=4096)
def _exterior(geom: AnnularGeometry, k: int) -> ModeMatrix:
    re = geom.r_e
    if k == 0:
        return _mat(0, "ExteriorDtN", 0.0, 0.0, 0.0, 1 / (re * math.log(geom.R / re)))
    _, v, _, one_v, _ = _ratios(geom, k)
    return _mat(k, "ExteriorDtN", k / geom.r_i, 0.0, 0.0, (1 + v) / one_v * (k / re))


def difference_mode(geom: AnnularGeometry, mu: float, m: int) -> ModeMatrix:
    """``B_m - mu * C_m`` evaluated without cancellation in the diagonal."""
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    return _with_m(_difference(geom, float(mu), abs(m)), m)


@lru_cache(maxsize=8192)
def _difference(geom: AnnularGeometry, mu: float, k: int) -> ModeMatrix:
    ri, re = geom.r_i, geom.r_e
    if k == 0:
        b, c = _interior(geom, 0), _exterior(geom, 0)
        return _mat(0, "Difference", b[0, 0], b[0, 1], b[1, 0], b[1, 1] - c[1, 1] * mu)
    t, v, one_t, one_v, s = _ratios(geom, k)
    gap = S(1.0 - mu)  # exactly zero at critical contrast
    excess_i = 2 * t / one_t  # coth - 1 on the annulus
    excess_e = 2 * v / one_v  # coth - 1 on the outer annulus
    # excess_i - excess_e = 2 (t - v) / ((1 - t)(1 - v)) with t - v = v (e^{2kL} - 1), L = ln(r_i R / r_e^2)
    excess_diff = 2 * v * _expm1_scaled(2 * k * _log_defect(geom)) / (one_t * one_v)
    csch2 = 2 * s / one_t
    d11 = (gap + excess_i) * (k / ri)
    d22 = (gap * (1 + excess_e) + excess_diff) * (k / re)
    return _mat(k, "Difference", d11, -csch2 * (k / ri), -csch2 * (k / re), d22)


def critical_difference_closed_form(geom: AnnularGeometry, m: int) -> ModeMatrix:
    """The ``mu = 1`` block written in powers of ``r_e/r_i`` and ``R/r_e`` (independent of :func:`difference_mode`)."""
    k = abs(m)
    ri, re = geom.r_i, geom.r_e
    if k == 0:
        lq, lp = math.log(re / ri), math.log(geom.R / re)
        return _mat(m, "Difference", 1 / (ri * lq), -1 / (ri * lq), -1 / (re * lq),
                    (1 / lq - 1 / lp) / re)
    q2 = scaled_ratio_pow(re, ri, 2 * k) - 1
    p2 = scaled_ratio_pow(geom.R, re, 2 * k) - 1
    qk = scaled_ratio_pow(re, ri, k)
    return _mat(m, "Difference", (2 * k / ri) / q2, -qk / q2 * (2 * k / ri), -qk / q2 * (2 * k / re),
                (_ONE / q2 - _ONE / p2) * (2 * k / re))


def critical_inverse_closed_form(geom: AnnularGeometry, m: int) -> ModeMatrix:
    """Closed-form inverse of the ``mu = 1`` block for ``m != 0``."""
    k = abs(m)
    if k == 0:
        raise ValueError("closed-form inverse is stated for m != 0 only")
    ri, re = geom.r_i, geom.r_e
    qk = scaled_ratio_pow(re, ri, k)
    one_v = S(one_minus_ratio_pow(re, geom.R, 2 * k))
    # 1 - (r_e^2 / (r_i R))^{2k} = -(e^{-2kL} - 1)
    first = -_expm1_scaled(-2 * k * _log_defect(geom))
    f = -1.0 / (2 * k)
    return _mat(m, "DifferenceInverse", first * (f * ri), qk * one_v * (f * re),
                qk * one_v * (f * ri), one_v * (f * re))


def invert_difference_mode(geom: AnnularGeometry, mu: float, m: int) -> ModeMatrix:
    """Inverse of ``B_m - mu C_m``; closed form at ``mu = 1``, ``m != 0``, direct 2x2 inversion otherwise."""
    return _with_m(_inverse(geom, float(mu), abs(m)), m)


@lru_cache(maxsize=8192)
def _inverse(geom: AnnularGeometry, mu: float, k: int) -> ModeMatrix:
    if mu == 1 and k != 0:
        return critical_inverse_closed_form(geom, k)
    d = _difference(geom, mu, k)
    (a, b), (c, e) = d.entries
    ad, bc = a * e, b * c
    det = ad - bc
    scale = abs(ad) + abs(bc)
    if det.sign == 0 or (scale.sign and (abs(det) / scale).log2_abs() < -46):
        raise SingularModeError(f"B_m - mu C_m is singular for mu={mu}, m={k}")
    inv = _ONE / det
    return _mat(k, "DifferenceInverse", e * inv, -b * inv, -c * inv, a * inv)


def theta_mode(geom: AnnularGeometry, mu: float, m: int) -> ModeMatrix:
    """Interface operator block ``(1/2)(B_m - mu C_m) diag(w_i, w_e)``."""
    lam = lambda_block(geom, m)
    return difference_mode(geom, mu, m).scale_columns(0.5 * lam.w_i, 0.5 * lam.w_e, "Theta")


def psi_mode(geom: AnnularGeometry, mu: float, m: int) -> ModeMatrix:
    """Symmetric-order block ``(1/2) diag(sqrt w) (B_m - mu C_m) diag(sqrt w)``."""
    lam = lambda_block(geom, m)
    si, se = math.sqrt(lam.w_i), math.sqrt(lam.w_e)
    d = difference_mode(geom, mu, m).scale_columns(si, se, "Psi")
    return d.scale_rows(0.5 * si, 0.5 * se, "Psi")


def all_mode_matrices(geom: AnnularGeometry, mu: float, m: int) -> list[ModeMatrix]:
    """The six blocks of one mode in :data:`KINDS` order."""
    return [
        interior_dtn_mode(geom, m),
        exterior_dtn_mode(geom, m),
        difference_mode(geom, mu, m),
        invert_difference_mode(geom, mu, m),
        theta_mode(geom, mu, m),
        psi_mode(geom, mu, m),
    ]
