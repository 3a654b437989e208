"""Regularized problem ``-div((h_mu + i delta) grad u) = g`` per Fourier mode and delta sweeps.

For ``delta != 0`` the form is coercive and every mode has a unique
solution.  Each region carries two radial basis functions (normalized to be
at most one on the region), so one mode is a 6x6 linear system: regularity at
the origin, continuity of ``u`` and of the flux ``c u'`` on both interface
circles, and ``u(R) = 0``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_M_MAX, AnnularGeometry, IndeflaError
from .critical import SourceSpec, neumann_trace_re
from .poisson import ModeSolution, RadialPiece, SourceTerm

REGIONS = ("inner", "annulus", "outer")

# default sweep: 10^-1, 10^-1.5, ..., 10^-5
DEFAULT_DELTAS = tuple(10.0 ** (-1 - 0.5 * j) for j in range(9))


class SingularSystemError(IndeflaError, np.linalg.LinAlgError):
    code = "singular_system"

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


def region_coefficients(mu: float, delta: float) -> tuple[complex, complex, complex]:
    c_plus = complex(-mu, delta)
    return c_plus, complex(1.0, delta), c_plus


def assemble_mode_system(geom: AnnularGeometry, mu: float, delta: float, m: int, fprime_re: complex = 0j):
    """Matrix and right-hand side for unknowns ``(A1, B1, A2, B2, A3, B3)``.

    ``fprime_re`` is ``f_m'(r_e)`` of the zero-Dirichlet lift of the source.
    """
    ri, re, R = geom.r_i, geom.r_e, geom.R
    c1, c2, c3 = region_coefficients(mu, delta)
    k = abs(m)
    M = np.zeros((6, 6), dtype=complex)
    rhs = np.zeros(6, dtype=complex)
    if k == 0:
        # bases: 1 and ln(r/r_i) | 1 and ln(r/r_e) | 1 and ln(r/R); r u' of the log basis is 1
        lie, ler = math.log(ri / re), math.log(re / R)
        M[0] = [0, 1, 0, 0, 0, 0]
        M[1] = [1, 0, -1, -lie, 0, 0]
        M[2] = [0, c1, 0, -c2, 0, 0]
        M[3] = [0, 0, 1, 0, -1, -ler]
        M[4] = [0, 0, 0, c2, 0, -c3]
        M[5] = [0, 0, 0, 0, 1, 0]
    else:
        s = (ri / re) ** k
        w = (re / R) ** k
        # bases: (r/r_i)^k, (r_i/r)^k | (r/r_e)^k, (r_i/r)^k | (r/R)^k, (r_e/r)^k; rows of fluxes divided by k
        M[0] = [0, 1, 0, 0, 0, 0]
        M[1] = [1, 1, -s, -1, 0, 0]
        M[2] = [c1, -c1, -c2 * s, c2, 0, 0]
        M[3] = [0, 0, 1, s, -w, -1]
        M[4] = [0, 0, c2, -c2 * s, -c3 * w, c3]
        M[5] = [0, 0, 0, 0, 1, w]
    # the particular part -f/c3 vanishes at r_e and R; its flux enters the r_e balance
    rhs[4] = -re * fprime_re / max(k, 1)
    return M, rhs


def solve_regularized_mode(geom: AnnularGeometry, mu: float, delta: float, m: int,
                           source: SourceSpec) -> ModeSolution:
    """Mode ``m`` of ``u_delta`` on ``(0, R)``; ``delta`` may be negative (conjugate problem) but not zero."""
    if delta == 0:
        raise ValueError("delta must be nonzero for the regularized problem")
    if mu <= 0:
        raise ValueError("mu must be positive")
    source.validate(geom)
    c3 = region_coefficients(mu, delta)[2]
    h = source.spectrum.coefficient(m)
    fp = neumann_trace_re(geom, m, source)
    M, rhs = assemble_mode_system(geom, mu, delta, m, fp)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularSystemError(f"mode system singular to working precision (cond={cond:.3g}, m={m}, delta={delta})")
    A1, _, A2, B2, A3, B3 = np.linalg.solve(M, rhs)
    ri, re, R = geom.r_i, geom.r_e, geom.R
    st = None
    if h != 0 and not source.empty:
        st = SourceTerm(m, re, R, source.a, source.b, -h / c3)
    if m == 0:
        pieces = (RadialPiece(0.0, ri, 0, coef_const=A1),
                  RadialPiece(ri, re, 0, coef_const=A2, coef_log=B2),
                  RadialPiece(re, R, 0, coef_const=A3, coef_log=B3, source_term=st))
    else:
        pieces = (RadialPiece(0.0, ri, m, coef_pos=A1),
                  RadialPiece(ri, re, m, coef_pos=A2, coef_neg=B2),
                  RadialPiece(re, R, m, coef_pos=A3, coef_neg=B3, source_term=st))
    return ModeSolution(m, pieces)


def _closed_form_h1(piece: RadialPiece) -> float | None:
    r0, r1, k = piece.r0, piece.r1, piece.k
    if piece.source_term is not None:
        return None
    if k == 0:
        C, L = piece.coef_const, piece.coef_log
        if L != 0 and r0 == 0:
            return math.inf
        grad = abs(L) ** 2 * math.log(r1 / r0) if L != 0 else 0.0
        l0 = math.log(r0 / r1) if r0 > 0 else 0.0
        lin = -(r0 * r0 / 2 * l0 - r0 * r0 / 4) + (-r1 * r1 / 4)  # int ln(r/r1) r dr
        sq = r1 * r1 / 4 - (r0 * r0 / 2 * l0 * l0 - r0 * r0 / 2 * l0 + r0 * r0 / 4)
        l2 = abs(C) ** 2 * (r1 * r1 - r0 * r0) / 2 + 2 * (C * np.conj(L)).real * lin + abs(L) ** 2 * sq
        return float(grad + l2)
    if piece.coef_const != 0:
        return None
    P, N = piece.coef_pos, piece.coef_neg
    ratio = r0 / r1
    grad = k * (abs(P) ** 2 + abs(N) ** 2) * (-math.expm1(2 * k * math.log(ratio))) if r0 > 0 else k * abs(P) ** 2
    l2 = abs(P) ** 2 * r1 * r1 * (1 - ratio ** (2 * k + 2)) / (2 * k + 2)
    if r0 > 0 and N != 0:
        if k == 1:
            l2 += abs(N) ** 2 * r0 * r0 * math.log(r1 / r0)
        else:
            l2 += abs(N) ** 2 * r0 * r0 * (1 - ratio ** (2 * k - 2)) / (2 * k - 2)
        l2 += 2 * (P * np.conj(N)).real * ratio ** k * (r1 * r1 - r0 * r0) / 2
    return float(grad + l2)


def _h1_integrand(piece: RadialPiece, r: np.ndarray) -> np.ndarray:
    u = piece.evaluate(r)
    du = piece.derivative(r)
    val = np.abs(du) ** 2 + np.abs(u) ** 2
    if piece.k:
        val = val + piece.k ** 2 * np.abs(u) ** 2 / (r * r)
    return val * r


def piece_h1_quadrature(piece: RadialPiece, points=None, rtol: float = 1e-12, nodes: int = 24,
                        max_panels: int = 4096) -> float:
    """Composite Gauss-Legendre with panel doubling until two levels agree to ``rtol``."""
    cuts = sorted({piece.r0, piece.r1, *[p for p in (points or []) if piece.r0 < p < piece.r1]})
    x, w = np.polynomial.legendre.leggauss(nodes)
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        prev = None
        panels = 4
        while True:
            edges = np.linspace(lo, hi, panels + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
            val = float(np.sum(_h1_integrand(piece, r).reshape(panels, nodes) * w[None, :] * half[:, None]))
            if prev is not None and abs(val - prev) <= rtol * abs(val):
                break
            if prev is not None and val == 0.0 and prev == 0.0:
                break
            if panels >= max_panels:
                break
            prev = val
            panels *= 2
        total += val
    return total


def piece_h1(piece: RadialPiece) -> float:
    """``int (|u'|^2 + m^2 |u|^2 / r^2 + |u|^2) r dr`` over the piece."""
    val = _closed_form_h1(piece)
    if val is not None:
        return val
    st = piece.source_term
    return piece_h1_quadrature(piece, points=[st.a, st.b] if st is not None else None)


def h1_norms(solution: ModeSolution, geom: AnnularGeometry) -> dict:
    """Squared mode H^1 integrals over the inner disk, the annulus and the outer annulus."""
    bounds = {"inner": (0.0, geom.r_i), "annulus": (geom.r_i, geom.r_e), "outer": (geom.r_e, geom.R)}
    out = {name: 0.0 for name in REGIONS}
    for piece in solution.pieces:
        mid = 0.5 * (piece.r0 + piece.r1)
        for name, (lo, hi) in bounds.items():
            if lo <= mid <= hi:
                out[name] += piece_h1(piece)
    return out


@dataclass
class DeltaSweepReport:
    mu: float
    deltas: list
    norms: list  # per delta: {"inner":..., "annulus":..., "outer":...}
    exponent: float  # fitted p in ||u||^2_{H^1(annulus)} ~ delta^-p
    residual: float
    exponents: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    bounded: dict = field(default_factory=dict)
    fit_points: int = 0
    modes: int = 0

    def as_dict(self) -> dict:
        return {
            "mu": self.mu,
            "exponent": self.exponent,
            "residual": self.residual,
            "exponents": self.exponents,
            "residuals": self.residuals,
            "bounded": self.bounded,
            "fit_points": self.fit_points,
            "modes": self.modes,
            "rows": [{"delta": d, **n} for d, n in zip(self.deltas, self.norms)],
        }

    def series(self, region: str) -> np.ndarray:
        return np.array([n[region] for n in self.norms])


def fit_exponent(deltas, values, discard: int = 2) -> tuple[float, float]:
    """Least-squares ``p`` in ``values ~ delta**(-p)`` and RMS log residual, skipping the ``discard`` largest deltas."""
    d = np.asarray(deltas, float)
    v = np.asarray(values, float)
    order = np.argsort(-d)
    d, v = d[order][discard:], v[order][discard:]
    if len(d) < 4:
        raise ValueError("exponent fit needs at least 4 points")
    x, y = np.log(d), np.log(v)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(-coef[0]), float(np.sqrt(np.mean(res ** 2)))


def delta_sweep(geom: AnnularGeometry, mu: float, source: SourceSpec, deltas=DEFAULT_DELTAS,
                m_max: int = DEFAULT_M_MAX, discard: int = 2, growth_factor: float = 2.0,
                min_exponent: float = 0.1, workers: int = 1) -> DeltaSweepReport:
    """Squared H^1 norms of ``u_delta`` on the three regions over a decreasing delta grid.

    Norms are over the disk (the angular factor ``2 pi`` included).  With
    ``workers > 1`` the deltas are solved in a thread pool; the result does
    not depend on the schedule.
    """
    deltas = sorted((float(d) for d in deltas), reverse=True)
    if len(deltas) < 4 or min(deltas) <= 0:
        raise ValueError("need at least 4 positive deltas")
    if len(set(deltas)) != len(deltas):
        raise ValueError("deltas must be distinct")
    if math.log10(deltas[0] / deltas[-1]) < 3 - 1e-9:
        raise ValueError("deltas must span at least 3 decades")
    source.validate(geom)
    modes = source.spectrum.support(m_max)

    def one(d):
        acc = {name: 0.0 for name in REGIONS}
        for m in modes:
            for name, v in h1_norms(solve_regularized_mode(geom, mu, d, m, source), geom).items():
                acc[name] += 2 * math.pi * v
        return acc

    norms = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(one, d) for d in deltas]
            results = []
            for fut in futures:
                try:
                    results.append(fut.result())
                except SingularSystemError as exc:
                    results.append(exc)
    else:
        results = []
        for d in deltas:
            try:
                results.append(one(d))
            except SingularSystemError as exc:
                results.append(exc)
                break
    for res in results:
        if isinstance(res, SingularSystemError):
            res.partial = DeltaSweepReport(mu, deltas[:len(norms)], norms, math.nan, math.nan, modes=len(modes))
            raise res
        norms.append(res)

    n_fit = max(len(deltas) - discard, 0)
    exps, resids, bounded = {}, {}, {}
    for name in REGIONS:
        vals = [n[name] for n in norms]
        if min(vals) <= 0:
            exps[name], resids[name] = 0.0, 0.0
            bounded[name] = True
            continue
        p, res = fit_exponent(deltas, vals, discard=discard) if n_fit >= 4 else (math.nan, math.nan)
        exps[name], resids[name] = p, res
        bounded[name] = not (vals[-1] / vals[0] > growth_factor and p > min_exponent)
    return DeltaSweepReport(mu=mu, deltas=deltas, norms=norms, exponent=exps["annulus"],
                            residual=resids["annulus"], exponents=exps, residuals=resids,
                            bounded=bounded, fit_points=n_fit, modes=len(modes))
