"""Finite-difference reference solver for the per-mode transmission problems.

Deliberately independent of the closed forms: no scaled arithmetic, no
Dirichlet-to-Neumann blocks.  Each segment between breakpoints (origin,
interfaces, source edges, outer boundary) carries its own uniform grid;
interface nodes are duplicated and coupled by continuity of ``u`` and of
``c u'`` with second-order one-sided differences.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import AnnularGeometry, Contrast, IndeflaError
from .critical import SourceSpec


class SingularDiscreteSystemError(IndeflaError, np.linalg.LinAlgError):
    code = "singular_discrete_system"


@dataclass(frozen=True)
class RadialGrid:
    breakpoints: tuple
    n_points: int

    def __post_init__(self):
        if self.n_points < 64:
            raise ValueError("n_points must be at least 64")
        bp = self.breakpoints
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @classmethod
    def for_problem(cls, geom: AnnularGeometry, source: SourceSpec | None, n_points: int = 128) -> "RadialGrid":
        pts = {0.0, geom.r_i, geom.r_e, geom.R}
        if source is not None and not source.empty:
            pts |= {source.a, source.b}
        return cls(tuple(sorted(pts)), n_points)

    @property
    def segments(self) -> list[tuple[float, float]]:
        return list(zip(self.breakpoints, self.breakpoints[1:]))

    def nodes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, self.n_points) for lo, hi in self.segments]

    def spacing(self) -> list[float]:
        return [(hi - lo) / (self.n_points - 1) for lo, hi in self.segments]

    def refined(self) -> "RadialGrid":
        """Grid with every spacing halved (nodes of ``self`` are nodes of the result)."""
        return RadialGrid(self.breakpoints, 2 * self.n_points - 1)


@dataclass
class SampledField:
    grid: RadialGrid
    values: list  # one complex array per segment

    @property
    def r(self) -> np.ndarray:
        return np.concatenate(self.grid.nodes())

    @property
    def u(self) -> np.ndarray:
        return np.concatenate(self.values)


def _segment_coefficient(geom: AnnularGeometry, coefficients, lo: float, hi: float) -> complex:
    mid = 0.5 * (lo + hi)
    if mid < geom.r_i:
        return coefficients[0]
    if mid < geom.r_e:
        return coefficients[1]
    return coefficients[2]


def _segment_source(source: SourceSpec | None, m: int, lo: float, hi: float) -> complex:
    if source is None or source.empty:
        return 0j
    mid = 0.5 * (lo + hi)
    return source.spectrum.coefficient(m) if source.a < mid < source.b else 0j


def fd_transmission_solve(geom: AnnularGeometry, contrast: Contrast, m: int, source: SourceSpec | None,
                          grid: RadialGrid) -> SampledField:
    """Solve ``-c (u'' + u'/r - m^2 u / r^2) = g_m 1_(a,b)`` with transmission, regularity and ``u(R) = 0``.

    ``c = -mu + i delta`` on ``(0, r_i)`` and ``(r_e, R)``, ``1 + i delta`` on ``(r_i, r_e)``.
    """
    coefficients = contrast.coefficients()
    k = abs(m)
    n = grid.n_points
    segs = grid.segments
    S = len(segs)
    N = S * n
    rows, cols, vals = [], [], []
    rhs = np.zeros(N, dtype=complex)

    def put(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    for s, (lo, hi) in enumerate(segs):
        h = (hi - lo) / (n - 1)
        c = _segment_coefficient(geom, coefficients, lo, hi)
        g = _segment_source(source, m, lo, hi)
        r = np.linspace(lo, hi, n)
        base = s * n
        for j in range(1, n - 1):
            rj = r[j]
            put(base + j, base + j - 1, -c * (1 / h ** 2 - 1 / (2 * h * rj)))
            put(base + j, base + j, -c * (-2 / h ** 2 - k * k / rj ** 2))
            put(base + j, base + j + 1, -c * (1 / h ** 2 + 1 / (2 * h * rj)))
            rhs[base + j] = g

    # origin
    if k == 0:
        h0 = segs[0][1] / (n - 1)
        put(0, 0, -3 / (2 * h0))
        put(0, 1, 4 / (2 * h0))
        put(0, 2, -1 / (2 * h0))
    else:
        put(0, 0, 1.0)
    # outer boundary
    put(N - 1, N - 1, 1.0)
    # interfaces: the left segment's last row holds continuity, the right segment's first row the flux balance
    for s in range(S - 1):
        (lo_l, hi_l), (lo_r, hi_r) = segs[s], segs[s + 1]
        hl, hr = (hi_l - lo_l) / (n - 1), (hi_r - lo_r) / (n - 1)
        cl = _segment_coefficient(geom, coefficients, lo_l, hi_l)
        cr = _segment_coefficient(geom, coefficients, lo_r, hi_r)
        last = s * n + n - 1
        first = (s + 1) * n
        put(last, last, 1.0)
        put(last, first, -1.0)
        put(first, last, cl * 3 / (2 * hl))
        put(first, last - 1, -cl * 4 / (2 * hl))
        put(first, last - 2, cl * 1 / (2 * hl))
        put(first, first, -cr * -3 / (2 * hr))
        put(first, first + 1, -cr * 4 / (2 * hr))
        put(first, first + 2, -cr * -1 / (2 * hr))

    A = sp.csc_matrix((vals, (rows, cols)), shape=(N, N), dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            lu = spla.splu(A)
            u = lu.solve(rhs)
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise SingularDiscreteSystemError(f"discrete system singular: {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise SingularDiscreteSystemError("discrete solution is not finite")
    return SampledField(grid, [u[s * n:(s + 1) * n] for s in range(S)])


def sample(field, grid: RadialGrid) -> list[np.ndarray]:
    """Per-segment samples of a closed-form field (anything with ``evaluate``) or a :class:`SampledField`."""
    if isinstance(field, SampledField):
        if field.grid != grid:
            raise ValueError("sampled field lives on a different grid")
        return field.values
    out = []
    for lo, hi in grid.segments:
        r = np.linspace(lo, hi, grid.n_points)
        # evaluate strictly inside the segment's own piece at shared breakpoints
        pieces = getattr(field, "pieces", None)
        if pieces is not None:
            mid = 0.5 * (lo + hi)
            piece = next(p for p in pieces if p.r0 <= mid <= p.r1)
            out.append(np.asarray(piece.evaluate(r), dtype=complex))
        else:
            out.append(np.asarray(field.evaluate(r), dtype=complex))
    return out


def fd_residual(field, m: int, coefficients, source: SourceSpec | None, grid: RadialGrid,
                geom: AnnularGeometry) -> float:
    """Max over interior nodes of ``|-c L_h u - g_m| / (1 + |g_m|)``.

    ``coefficients`` holds the complex coefficient on ``(0, r_i)``,
    ``(r_i, r_e)`` and ``(r_e, R)``, e.g. :meth:`Contrast.coefficients`.
    """
    k = abs(m)
    samples = sample(field, grid)
    hm = source.spectrum.coefficient(m) if source is not None else 0j
    worst = 0.0
    for (lo, hi), u in zip(grid.segments, samples):
        h = (hi - lo) / (grid.n_points - 1)
        r = np.linspace(lo, hi, grid.n_points)[1:-1]
        c = _segment_coefficient(geom, coefficients, lo, hi)
        g = _segment_source(source, m, lo, hi)
        lap = (u[2:] - 2 * u[1:-1] + u[:-2]) / h ** 2 + (u[2:] - u[:-2]) / (2 * h * r) - k * k * u[1:-1] / r ** 2
        res = np.abs(-c * lap - g) / (1 + abs(hm))
        worst = max(worst, float(np.max(res)))
    return worst


def max_error(field, reference, grid: RadialGrid) -> float:
    a = sample(field, grid)
    b = sample(reference, grid)
    return max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))


def convergence_study(geom: AnnularGeometry, contrast: Contrast, m: int, source: SourceSpec,
                      n_points: int = 65, doublings: int = 3, exact=None) -> dict:
    """Errors and observed orders under repeated halving of the spacing.

    With ``exact`` (closed-form field) the errors are measured against it;
    otherwise successive solutions are compared on the coarse nodes
    (self-convergence).
    """
    grids = [RadialGrid.for_problem(geom, source, n_points)]
    for _ in range(doublings):
        grids.append(grids[-1].refined())
    sols = [fd_transmission_solve(geom, contrast, m, source, g) for g in grids]
    if exact is not None:
        errors = [max_error(s, exact, g) for s, g in zip(sols, grids)]
    else:
        errors = []
        for coarse, fine in zip(sols, sols[1:]):
            stride = (fine.grid.n_points - 1) // (coarse.grid.n_points - 1)
            errors.append(max(float(np.max(np.abs(c - f[::stride]))) for c, f in zip(coarse.values, fine.values)))
    orders = [float(np.log2(e0 / e1)) for e0, e1 in zip(errors, errors[1:])]
    return {"n_points": [g.n_points for g in grids], "errors": errors, "orders": orders}
