"""Critical contrast (mu = 1): range membership and mode-by-mode inversion.

A source ``g = 1_(a,b)(r) h(theta)`` supported in the outer annulus is first
lifted by the Dirichlet solve ``f`` on ``(r_e, R)``.  Its flux on ``S_{r_e}``
is corrected by interface data ``psi_m`` obtained from the inverse of the
critical difference block, and the solution is assembled from harmonic
extensions of ``psi_m``.  The series deciding whether ``g`` is in the range
is dominated by ``(r_e^2 / (r_i a))^(2|m|)``, so membership reduces to a
ratio test against the critical radius ``r_e^2 / r_i``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (DEFAULT_M_MAX, AnnularGeometry, IndeflaError, ScaledValue, critical_radius,
                   one_minus_ratio_pow, scaled_ratio_pow)
from .dtn import invert_difference_mode
from .poisson import (ModeSolution, RadialPiece, SourceTerm, TraceModeVector, _power_moment,
                      _rising_moment, exterior_poisson_mode, interior_poisson_mode)

log = logging.getLogger(__name__)

DEFAULT_MARGIN = 0.01
TAIL_TOLERANCE = 1e-8


class SourceError(IndeflaError, ValueError):
    code = "invalid_source"


class NotInRangeError(IndeflaError):
    """The source is not in the range of the critical operator (no L^2 solution exists)."""

    code = "not_in_range"

    def __init__(self, report: "MembershipReport"):
        self.report = report
        super().__init__(
            f"source is not in the range of the critical operator: term ratio {report.rho:.6g} > 1 "
            f"(support starts below the critical radius)")


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AngularSpectrum:
    """Fourier coefficients ``h_m`` of the angular profile.

    Either ``explicit`` (finite map ``m -> h_m``) or parametric with
    ``|h_m| = amplitude * (1 + |m|)**(-power) * ratio**|m|``.
    """

    explicit: dict | None = None
    amplitude: float = 1.0
    power: float = 0.0
    ratio: float = 1.0

    def __post_init__(self):
        if self.explicit is None:
            if self.amplitude < 0:
                raise SourceError("spectrum amplitude must be nonnegative")
            if self.ratio <= 0:
                raise SourceError("spectrum geometric ratio must be positive")
        else:
            object.__setattr__(self, "explicit", {int(k): complex(v) for k, v in self.explicit.items()})

    @classmethod
    def single(cls, m: int, value: complex = 1.0) -> "AngularSpectrum":
        return cls(explicit={m: value})

    @classmethod
    def parametric(cls, amplitude: float = 1.0, power: float = 0.0, ratio: float = 1.0) -> "AngularSpectrum":
        return cls(None, amplitude, power, ratio)

    @property
    def is_explicit(self) -> bool:
        return self.explicit is not None

    @property
    def finite_support(self) -> bool:
        return self.is_explicit or self.amplitude == 0

    def coefficient(self, m: int) -> complex:
        if self.is_explicit:
            return self.explicit.get(int(m), 0j)
        k = abs(m)
        return complex(self.amplitude * (1 + k) ** (-self.power) * self.ratio ** k)

    def support(self, m_max: int) -> list[int]:
        """Modes with nonzero coefficient in ``[-m_max, m_max]``, ordered by ``|m|`` then sign."""
        if self.is_explicit:
            modes = [k for k, v in self.explicit.items() if v != 0 and abs(k) <= m_max]
        elif self.amplitude == 0:
            modes = []
        else:
            modes = [0] + [s * k for k in range(1, m_max + 1) for s in (1, -1)]
        return sorted(modes, key=lambda k: (abs(k), -k))

    def max_abs_mode(self) -> int:
        return max((abs(k) for k, v in self.explicit.items() if v != 0), default=0) if self.is_explicit else 0

    def __add__(self, other: "AngularSpectrum") -> "AngularSpectrum":
        if not (self.is_explicit and other.is_explicit):
            raise TypeError("only explicit spectra can be added")
        keys = set(self.explicit) | set(other.explicit)
        return AngularSpectrum(explicit={k: self.coefficient(k) + other.coefficient(k) for k in keys})


@dataclass(frozen=True)
class SourceSpec:
    a: float
    b: float
    spectrum: AngularSpectrum

    def validate(self, geom: AnnularGeometry) -> None:
        if not (geom.r_e <= self.a <= self.b <= geom.R):
            raise SourceError(
                f"source support (a, b) = ({self.a}, {self.b}) must satisfy r_e <= a < b <= R "
                f"with r_e={geom.r_e}, R={geom.R}")

    @property
    def empty(self) -> bool:
        return not (self.b > self.a)


@dataclass
class MembershipReport:
    verdict: str  # "InRange", "NotInRange", "Inconclusive"
    rho: float
    truncation: int
    partial_sums: list = field(default_factory=list)  # (M, log10 of partial sum or -inf)
    mode_terms: dict = field(default_factory=dict)  # m -> log10 of the series term
    zero_mode_term: float = 0.0
    empirical_ratio: float | None = None
    tail_estimate_log10: float | None = None
    truncation_warning: bool = False
    critical_radius: float = 0.0
    margin: float = DEFAULT_MARGIN

    def as_dict(self) -> dict:
        def clean(x):
            if x is None or (isinstance(x, float) and not math.isfinite(x)):
                return None
            return x
        return {
            "verdict": self.verdict,
            "rho": self.rho,
            "truncation": self.truncation,
            "critical_radius": self.critical_radius,
            "margin": self.margin,
            "empirical_ratio": clean(self.empirical_ratio),
            "tail_estimate_log10": clean(self.tail_estimate_log10),
            "truncation_warning": self.truncation_warning,
            "zero_mode_term": self.zero_mode_term,
            "partial_sums_log10": [[M, clean(v)] for M, v in self.partial_sums],
            "mode_terms_log10": {str(k): clean(v) for k, v in self.mode_terms.items()},
        }


def dirichlet_annulus_solve_mode(geom: AnnularGeometry, m: int, source: SourceSpec) -> RadialPiece:
    """Mode ``m`` of the zero-Dirichlet solution of ``Delta f = g`` on ``(r_e, R)`` as a single piece."""
    source.validate(geom)
    h = source.spectrum.coefficient(m)
    st = None if (h == 0 or source.empty) else SourceTerm(m, geom.r_e, geom.R, source.a, source.b, h)
    return RadialPiece(geom.r_e, geom.R, m, source_term=st)


def neumann_trace_re(geom: AnnularGeometry, m: int, source: SourceSpec) -> complex:
    """Radial derivative ``f_m'(r_e)`` of the annulus Dirichlet solve."""
    h = source.spectrum.coefficient(m)
    if h == 0 or source.empty:
        return 0j
    return h * neumann_trace_unit_scaled(geom, m, source.a, source.b).to_float()


def neumann_trace_unit_scaled(geom: AnnularGeometry, m: int, a: float, b: float) -> ScaledValue:
    """``f_m'(r_e)`` for unit ``h_m`` in scaled form (exact for any ``|m|``)."""
    if not (b > a):
        return ScaledValue.zero()
    re, R = geom.r_e, geom.R
    k = abs(m)
    if k == 0:
        def F(s):
            return 0.5 * s * s * math.log(R / s) + 0.25 * s * s
        return ScaledValue.from_float(-(F(b) - F(a)) / (re * math.log(R / re)))
    # int_a^b (r_e/s)^k s ds = (r_e/a)^k int_a^b (a/s)^k s ds, and likewise for the decaying term
    near = float(_power_moment(a, a, b, k))
    far = float(_rising_moment(b, a, b, k))
    total = scaled_ratio_pow(re, a, k) * near - scaled_ratio_pow(re * b, R * R, k) * far
    return total * (-1.0 / (re * one_minus_ratio_pow(re, R, 2 * k)))


def term_ratio(geom: AnnularGeometry, source: SourceSpec) -> float:
    """Limit of successive series terms; 0 for finite support."""
    spec = source.spectrum
    if spec.finite_support:
        return 0.0
    return (spec.ratio * geom.r_e ** 2 / (geom.r_i * source.a)) ** 2


def _series_term(geom: AnnularGeometry, m: int, fprime: ScaledValue, h: complex) -> ScaledValue:
    """``(1/|m|) |h|^2 ||D_m^{-1} (0, f_m'(r_e))||^2`` for unit-source trace ``fprime``."""
    dinv = invert_difference_mode(geom, 1.0, m)
    x0 = dinv[0, 1] * fprime
    x1 = dinv[1, 1] * fprime
    norm2 = x0 * x0 + x1 * x1
    k = abs(m)
    return norm2 * (abs(h) ** 2 / (k if k else 1))


def _checkpoints(M: int) -> list[int]:
    pts = {M}
    k = 1
    while k < M:
        pts.add(k)
        k *= 2
    return sorted(pts)


def range_check(geom: AnnularGeometry, source: SourceSpec, margin: float = DEFAULT_MARGIN,
                m_max: int = DEFAULT_M_MAX, tail_tolerance: float = TAIL_TOLERANCE) -> MembershipReport:
    """Decide whether ``g`` lies in the range of the critical operator."""
    source.validate(geom)
    spec = source.spectrum
    rho = term_ratio(geom, source)
    if spec.finite_support:
        verdict = "InRange"
    elif rho < 1 - margin:
        verdict = "InRange"
    elif rho > 1 + margin:
        verdict = "NotInRange"
    else:
        verdict = "Inconclusive"

    M = max(m_max, spec.max_abs_mode()) if spec.is_explicit else m_max
    terms: dict[int, ScaledValue] = {}
    zero_term = 0.0
    for m in spec.support(M):
        h = spec.coefficient(m)
        fp = neumann_trace_unit_scaled(geom, m, source.a, source.b)
        if m == 0:
            dinv = invert_difference_mode(geom, 1.0, 0).to_array()
            zero_term = float(np.linalg.norm(dinv[:, 1] * fp.to_float() * abs(h)) ** 2)
            continue
        terms[m] = _series_term(geom, m, fp, h)

    partial = []
    acc = ScaledValue.zero()
    by_k: dict[int, ScaledValue] = {}
    for m, t in terms.items():
        by_k[abs(m)] = by_k.get(abs(m), ScaledValue.zero()) + t
    cps = set(_checkpoints(M))
    for k in range(1, M + 1):
        acc = acc + by_k.get(k, ScaledValue.zero())
        if k in cps:
            partial.append((k, _log10(acc)))

    empirical = None
    ks = sorted(by_k)
    if len(ks) >= 2 and ks[-1] - ks[-2] == 1 and by_k[ks[-2]].sign:
        empirical = 2.0 ** ((by_k[ks[-1]] / by_k[ks[-2]]).log2_abs())

    tail_log10 = None
    warn = False
    if not spec.finite_support and ks:
        last = by_k[ks[-1]]
        if rho < 1 and last.sign:
            tail = last * (rho / (1 - rho))
            tail_log10 = _log10(tail)
            warn = acc.sign != 0 and (tail / acc).log2_abs() > math.log2(tail_tolerance)
        elif rho >= 1:
            tail_log10 = math.inf
            warn = True
    # a divergent tail is the verdict itself for NotInRange; only warn where the truncation matters
    if warn and verdict != "NotInRange":
        warnings.warn(f"series truncated at |m| = {M} with estimated tail above {tail_tolerance:g} of the sum",
                      TruncationWarning, stacklevel=2)

    return MembershipReport(
        verdict=verdict, rho=rho, truncation=M, partial_sums=partial,
        mode_terms={m: _log10(t) for m, t in terms.items()}, zero_mode_term=zero_term,
        empirical_ratio=empirical, tail_estimate_log10=tail_log10, truncation_warning=warn,
        critical_radius=critical_radius(geom), margin=margin)


def _log10(x: ScaledValue) -> float:
    return x.log2_abs() * math.log10(2.0)


def interface_data(geom: AnnularGeometry, m: int, source: SourceSpec) -> np.ndarray:
    """``psi_m`` solving the flux balance; traces of the solution on ``Sigma`` are ``-psi_m``."""
    fp = neumann_trace_re(geom, m, source)
    dinv = invert_difference_mode(geom, 1.0, m).to_array()
    # -gamma_1^+ f = (0, f_m'(r_e)) since the outward normal of the outer annulus is -d/dr on S_{r_e}
    return dinv @ np.array([0.0, fp], dtype=complex)


def solve_critical_mode(geom: AnnularGeometry, m: int, source: SourceSpec) -> ModeSolution:
    """Per-mode solution on ``(0, R)`` of the critical problem with source ``g``."""
    source.validate(geom)
    psi = interface_data(geom, m, source)
    trace = TraceModeVector(m, -psi[0], -psi[1])
    middle = interior_poisson_mode(geom, trace)
    inner, outer = exterior_poisson_mode(geom, trace)
    f = dirichlet_annulus_solve_mode(geom, m, source)
    outer = RadialPiece(outer.r0, outer.r1, m, coef_pos=outer.coef_pos, coef_neg=outer.coef_neg,
                        coef_log=outer.coef_log, coef_const=outer.coef_const, source_term=f.source_term)
    return ModeSolution(m, (inner, middle, outer))


def solve_critical(geom: AnnularGeometry, source: SourceSpec, m_max: int = DEFAULT_M_MAX,
                   margin: float = DEFAULT_MARGIN, tail_tolerance: float = TAIL_TOLERANCE) -> tuple[dict, MembershipReport]:
    """Solve the critical problem for all modes up to ``m_max``.

    Returns ``({m: ModeSolution}, report)``; raises :class:`NotInRangeError`
    when the source is not in the range.
    """
    report = range_check(geom, source, margin=margin, m_max=m_max, tail_tolerance=tail_tolerance)
    if report.verdict == "NotInRange":
        raise NotInRangeError(report)
    M = report.truncation
    sols = {m: solve_critical_mode(geom, m, source) for m in source.spectrum.support(M)}
    if report.verdict == "Inconclusive":
        log.warning("membership inconclusive (rho = %.4g); returning truncated synthesis", report.rho)
    return sols, report


def synthesize(solutions: dict, r, theta) -> np.ndarray:
    """Angular synthesis ``sum_m u_m(r) e^{i m theta}`` on matching arrays ``r``, ``theta``."""
    r = np.asarray(r, float)
    theta = np.asarray(theta, float)
    out = np.zeros(np.broadcast(r, theta).shape, dtype=complex)
    for m, sol in solutions.items():
        out = out + sol.evaluate(r) * np.exp(1j * m * theta)
    return out
