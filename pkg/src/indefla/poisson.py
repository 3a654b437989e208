"""Harmonic extensions per Fourier mode and the piecewise radial fields built from them.

A :class:`RadialPiece` on ``(r0, r1)`` for mode ``m != 0`` is

    coef_pos * (r/r1)**|m| + coef_neg * (r0/r)**|m| + coef_const + source(r)

and for ``m == 0``

    coef_const + coef_log * ln(r/r1) + source(r).

Both power functions are bounded by one on the piece, so evaluation never
overflows and the coefficients stay of the size of the boundary data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import AnnularGeometry, IndeflaError, one_minus_ratio_pow


class OutOfIntervalError(IndeflaError, ValueError):
    code = "out_of_interval"


@dataclass(frozen=True)
class TraceModeVector:
    m: int
    phi_i: complex
    phi_e: complex


@dataclass(frozen=True)
class SourceTerm:
    """``amplitude * f(r)`` where ``f'' + f'/r - m^2 f/r^2 = 1_(a,b)`` on ``(lo, hi)``, ``f(lo) = f(hi) = 0``."""

    m: int
    lo: float
    hi: float
    a: float
    b: float
    amplitude: complex = 1.0

    def scaled(self, factor: complex) -> "SourceTerm":
        return replace(self, amplitude=self.amplitude * factor)

    def value(self, r):
        return self.amplitude * dirichlet_profile(self.m, self.lo, self.hi, self.a, self.b, r)[0]

    def derivative(self, r):
        return self.amplitude * dirichlet_profile(self.m, self.lo, self.hi, self.a, self.b, r)[1]


def _power_moment(x, alpha, beta, k):
    """``int_alpha^beta (x/s)**k s ds`` for ``x <= alpha`` or ``x >= beta`` arrays; 0 where ``beta <= alpha``."""
    x, alpha, beta = np.broadcast_arrays(np.asarray(x, float), np.asarray(alpha, float), np.asarray(beta, float))
    ok = beta > alpha
    al = np.where(ok, alpha, 1.0)
    be = np.where(ok, beta, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if k == 2:
            out = x * x * np.log(be / al)
        else:
            out = (be * be * (x / be) ** k - al * al * (x / al) ** k) / (2 - k)
    return np.where(ok, out, 0.0)


def _rising_moment(x, alpha, beta, k):
    """``int_alpha^beta (s/x)**k s ds``; 0 where ``beta <= alpha``."""
    x, alpha, beta = np.broadcast_arrays(np.asarray(x, float), np.asarray(alpha, float), np.asarray(beta, float))
    ok = beta > alpha
    al = np.where(ok, alpha, 1.0)
    be = np.where(ok, beta, 1.0)
    out = (be * be * (be / x) ** k - al * al * (al / x) ** k) / (k + 2)
    return np.where(ok, out, 0.0)


def dirichlet_profile(m: int, lo: float, hi: float, a: float, b: float, r):
    """Value and derivative of the zero-Dirichlet solution of the radial Euler equation with source ``1_(a,b)``.

    Uses the Green's function of ``(r f')' - m^2 f / r`` on ``(lo, hi)``
    written with ratios bounded by one, so it is safe for any ``|m|``.
    """
    r = np.asarray(r, dtype=float)
    k = abs(int(m))
    if not (b > a):
        z = np.zeros_like(r)
        return z, z
    lo_part_end = np.minimum(r, b)   # integral over (a, min(r, b)) uses the left solution
    hi_part_start = np.maximum(r, a)  # integral over (max(r, a), b) uses the right solution
    if k == 0:
        Lh = math.log(hi / lo)

        def F1(s):
            return 0.5 * s * s * np.log(s / lo) - 0.25 * s * s

        def F2(s):
            return 0.5 * s * s * np.log(hi / s) + 0.25 * s * s

        J1 = np.where(lo_part_end > a, F1(np.maximum(lo_part_end, a)) - F1(a), 0.0)
        J2 = np.where(b > hi_part_start, F2(b) - F2(np.minimum(hi_part_start, b)), 0.0)
        f = -(np.log(hi / r) * J1 + np.log(r / lo) * J2) / Lh
        df = (J1 - J2) / (r * Lh)
        return f, df
    D = one_minus_ratio_pow(lo, hi, 2 * k)
    left = _rising_moment(r, a, lo_part_end, k) - _power_moment(lo * lo / r, a, lo_part_end, k)
    right = _power_moment(r, hi_part_start, b, k) - _rising_moment(hi * hi / r, hi_part_start, b, k)
    up = (r / hi) ** (2 * k)
    down = (lo / r) ** (2 * k)
    f = -((1 - up) * left + (1 - down) * right) / (2 * k * D)
    df = ((1 + up) * left - (1 + down) * right) / (2 * r * D)
    return f, df


@dataclass(frozen=True)
class RadialPiece:
    r0: float
    r1: float
    m: int
    coef_pos: complex = 0.0
    coef_neg: complex = 0.0
    coef_log: complex = 0.0
    coef_const: complex = 0.0
    source_term: SourceTerm | None = None

    def __post_init__(self):
        if not (0 <= self.r0 < self.r1):
            raise ValueError(f"invalid piece interval ({self.r0}, {self.r1})")
        if self.m != 0 and self.coef_log != 0:
            raise ValueError("logarithmic coefficient is only allowed for m = 0")
        if self.r0 == 0 and (self.coef_neg != 0 or self.coef_log != 0):
            raise ValueError("piece touching the origin must be regular there")

    @property
    def k(self) -> int:
        return abs(self.m)

    def scaled(self, factor: complex) -> "RadialPiece":
        return replace(self, coef_pos=self.coef_pos * factor, coef_neg=self.coef_neg * factor,
                       coef_log=self.coef_log * factor, coef_const=self.coef_const * factor,
                       source_term=None if self.source_term is None else self.source_term.scaled(factor))

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        tol = 1e-12 * self.r1
        if np.any(r < self.r0 - tol) or np.any(r > self.r1 + tol):
            raise OutOfIntervalError(f"r outside piece interval [{self.r0}, {self.r1}]")
        return np.clip(r, self.r0, self.r1)

    def _basis(self, r):
        k = self.k
        with np.errstate(divide="ignore", invalid="ignore"):
            if k == 0:
                log = np.log(r / self.r1) if self.coef_log != 0 else np.zeros_like(r)
                return np.ones_like(r), log
            pos = (r / self.r1) ** k
            neg = (self.r0 / r) ** k if self.r0 > 0 else np.zeros_like(r)
        return pos, neg

    def evaluate(self, r):
        r = self._check(r)
        if self.k == 0:
            one, log = self._basis(r)
            val = self.coef_const * one + self.coef_log * log
        else:
            pos, neg = self._basis(r)
            val = self.coef_pos * pos + self.coef_neg * neg + self.coef_const
        val = val + 0j
        if self.source_term is not None:
            val = val + self.source_term.value(r)
        return val

    def derivative(self, r):
        r = self._check(r)
        k = self.k
        with np.errstate(divide="ignore", invalid="ignore"):
            if k == 0:
                d = np.where(r > 0, self.coef_log / np.where(r > 0, r, 1.0), 0.0) + 0j
            else:
                pos, neg = self._basis(r)
                rs = np.where(r > 0, r, 1.0)
                d = (k / rs) * (self.coef_pos * pos - self.coef_neg * neg)
                if k == 1:
                    d = np.where(r > 0, d, self.coef_pos / self.r1)
                else:
                    d = np.where(r > 0, d, 0.0)
        d = d + 0j
        if self.source_term is not None:
            d = d + self.source_term.derivative(r)
        return d


def evaluate_radial(piece: RadialPiece, r):
    """Value of ``piece`` at ``r`` (scalar or array); raises :class:`OutOfIntervalError` outside it."""
    out = piece.evaluate(r)
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ModeSolution:
    m: int
    pieces: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for left, right in zip(self.pieces, self.pieces[1:]):
            if abs(left.r1 - right.r0) > 1e-12 * max(1.0, right.r0):
                raise ValueError("pieces must be contiguous")

    @property
    def breakpoints(self) -> list[float]:
        return [p.r0 for p in self.pieces] + [self.pieces[-1].r1]

    def piece_index(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, float))
        inner = np.array([p.r1 for p in self.pieces[:-1]])
        return np.searchsorted(inner, r, side="left")

    def piece_at(self, r: float) -> RadialPiece:
        return self.pieces[int(self.piece_index(r)[0])]

    def _apply(self, r, method):
        scalar = np.ndim(r) == 0
        rr = np.atleast_1d(np.asarray(r, float))
        idx = self.piece_index(rr)
        out = np.zeros(rr.shape, dtype=complex)
        for j, piece in enumerate(self.pieces):
            sel = idx == j
            if np.any(sel):
                out[sel] = getattr(piece, method)(rr[sel])
        return complex(out[0]) if scalar else out

    def evaluate(self, r):
        return self._apply(r, "evaluate")

    def derivative(self, r):
        return self._apply(r, "derivative")

    def scaled(self, factor: complex) -> "ModeSolution":
        return ModeSolution(self.m, tuple(p.scaled(factor) for p in self.pieces))


def interior_poisson_mode(geom: AnnularGeometry, trace: TraceModeVector) -> RadialPiece:
    """Harmonic function on ``(r_i, r_e)`` with the given mode traces on both circles."""
    ri, re = geom.r_i, geom.r_e
    k = abs(trace.m)
    pi, pe = complex(trace.phi_i), complex(trace.phi_e)
    if k == 0:
        return RadialPiece(ri, re, 0, coef_const=pe, coef_log=(pe - pi) / math.log(re / ri))
    one_t = one_minus_ratio_pow(ri, re, 2 * k)
    s = (ri / re) ** k
    return RadialPiece(ri, re, trace.m, coef_pos=(pe - s * pi) / one_t, coef_neg=(pi - s * pe) / one_t)


def exterior_poisson_mode(geom: AnnularGeometry, trace: TraceModeVector) -> tuple[RadialPiece, RadialPiece]:
    """Harmonic functions on ``(0, r_i)`` and ``(r_e, R)``, the latter vanishing at ``R``."""
    ri, re, R = geom.r_i, geom.r_e, geom.R
    k = abs(trace.m)
    pi, pe = complex(trace.phi_i), complex(trace.phi_e)
    if k == 0:
        inner = RadialPiece(0.0, ri, 0, coef_const=pi)
        outer = RadialPiece(re, R, 0, coef_log=-pe / math.log(R / re))
        return inner, outer
    inner = RadialPiece(0.0, ri, trace.m, coef_pos=pi)
    one_v = one_minus_ratio_pow(re, R, 2 * k)
    outer = RadialPiece(re, R, trace.m, coef_neg=pe / one_v, coef_pos=-((re / R) ** k) * pe / one_v)
    return inner, outer


def outward_fluxes_interior(geom: AnnularGeometry, piece: RadialPiece) -> np.ndarray:
    """Outward normal derivatives of an annulus field on ``S_{r_i}`` and ``S_{r_e}``."""
    return np.array([-piece.derivative(geom.r_i), piece.derivative(geom.r_e)]).astype(complex)


def outward_fluxes_exterior(geom: AnnularGeometry, inner: RadialPiece, outer: RadialPiece) -> np.ndarray:
    """Outward normal derivatives of the complement field on ``S_{r_i}`` and ``S_{r_e}``."""
    return np.array([inner.derivative(geom.r_i), -outer.derivative(geom.r_e)]).astype(complex)
