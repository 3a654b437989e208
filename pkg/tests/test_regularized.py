import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from indefla import (AngularSpectrum, AnnularGeometry, RadialGrid, RadialPiece, SingularSystemError, SourceSpec,
                     delta_sweep, fd_transmission_solve, h1_norms, solve_critical_mode, solve_regularized_mode)
from indefla.core import Contrast
from indefla.oracle import max_error
from indefla.regularized import (_closed_form_h1, assemble_mode_system, fit_exponent, piece_h1,
                                 piece_h1_quadrature, region_coefficients)

REAL_SOURCE = SourceSpec(5.0, 6.0, AngularSpectrum(explicit={m: 1.0 / (1 + abs(m)) for m in range(-6, 7)}))


def gauss(f, lo, hi, panels=64, nodes=20):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = mid[:, None] + half[:, None] * x[None, :]
    return np.sum(f(r.ravel()).reshape(r.shape) * w[None, :] * half[:, None])


@pytest.mark.parametrize("m", [0, 2])
def test_zero_source_gives_zero_solution(canonical, m):
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(m + 1))
    sol = solve_regularized_mode(canonical, 2.0, 0.1, m, src)
    assert np.all(sol.evaluate(np.linspace(0, 8, 17)) == 0)
    assert h1_norms(sol, canonical) == {"inner": 0.0, "annulus": 0.0, "outer": 0.0}


def test_rejects_zero_delta(canonical, mode3_source):
    with pytest.raises(ValueError):
        solve_regularized_mode(canonical, 1.0, 0.0, 3, mode3_source)


@given(st.floats(0.3, 4.0), st.floats(1e-4, 1.0), st.integers(0, 30))
def test_system_is_invertible(mu, delta, m):
    M, _ = assemble_mode_system(AnnularGeometry(1.0, 2.0, 8.0), mu, delta, m)
    assert abs(np.linalg.det(M)) > 0
    assert np.isfinite(np.linalg.cond(M))


@pytest.mark.parametrize("m", [0, 1, 4])
def test_conjugation_symmetry(canonical, m):
    r = np.linspace(0.0, 8.0, 81)
    for mu in (1.0, 2.0):
        up = solve_regularized_mode(canonical, mu, 0.05, m, REAL_SOURCE).evaluate(r)
        down = solve_regularized_mode(canonical, mu, -0.05, m, REAL_SOURCE).evaluate(r)
        np.testing.assert_allclose(down, np.conj(up), rtol=1e-10, atol=1e-10 * np.max(np.abs(up)))


@pytest.mark.parametrize("mu,delta,m", [(2.0, 0.1, 3), (1.0, 0.01, 0), (0.5, 0.3, 7), (1.0, 1e-3, 10)])
def test_transmission_and_boundary(canonical, mu, delta, m):
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(m, 1 - 2j))
    sol = solve_regularized_mode(canonical, mu, delta, m, src)
    c1, c2, c3 = region_coefficients(mu, delta)
    inner, mid, outer = sol.pieces
    ri, re = canonical.r_i, canonical.r_e
    size = max(abs(sol.evaluate(r)) for r in (ri, re, 5.5)) + max(abs(sol.derivative(r)) for r in (ri, re))
    assert abs(inner.evaluate(ri) - mid.evaluate(ri)) <= 1e-10 * size
    assert abs(mid.evaluate(re) - outer.evaluate(re)) <= 1e-10 * size
    assert abs(c1 * inner.derivative(ri) - c2 * mid.derivative(ri)) <= 1e-10 * size
    assert abs(c2 * mid.derivative(re) - c3 * outer.derivative(re)) <= 1e-10 * size
    assert abs(sol.evaluate(canonical.R)) <= 1e-10 * size


@pytest.mark.parametrize("mu,delta,m", [(2.0, 0.1, 3), (1.0, 0.01, 1), (1.0, 1e-3, 5), (3.0, 0.2, 0)])
def test_energy_identity(canonical, mu, delta, m):
    """sum over regions of c int (|u'|^2 + m^2 |u|^2 / r^2) r dr equals int g_m conj(u) r dr."""
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(m, 0.8 + 0.3j))
    sol = solve_regularized_mode(canonical, mu, delta, m, src)
    coeffs = region_coefficients(mu, delta)
    lhs = 0j
    for c, piece in zip(coeffs, sol.pieces):
        cuts = [piece.r0, piece.r1] if piece.source_term is None else [piece.r0, 5.0, 6.0, piece.r1]
        for lo, hi in zip(cuts, cuts[1:]):
            def grad(r, piece=piece):
                return (np.abs(piece.derivative(r)) ** 2 + m * m * np.abs(piece.evaluate(r)) ** 2 / r ** 2) * r
            lhs += c * gauss(grad, lo, hi)
    rhs = gauss(lambda r: (0.8 + 0.3j) * np.conj(sol.evaluate(r)) * r, 5.0, 6.0)
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


@pytest.mark.parametrize("mu,delta,m", [(2.0, 0.1, 3), (2.0, 0.05, 10), (1.0, 0.01, 1), (0.5, 0.2, 6)])
def test_matches_oracle_at_second_order(canonical, mu, delta, m):
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(m))
    exact = solve_regularized_mode(canonical, mu, delta, m, src)
    errors = []
    for n in (65, 129, 257):
        grid = RadialGrid.for_problem(canonical, src, n)
        errors.append(max_error(fd_transmission_solve(canonical, Contrast(mu, delta), m, src, grid), exact, grid))
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.6 <= coarse / fine <= 4.4
        assert math.log2(coarse / fine) >= 1.9


def test_constant_piece_h1():
    piece = RadialPiece(1.5, 3.0, 0, coef_const=2 - 1j)
    assert piece_h1(piece) == pytest.approx(5 * (9.0 - 2.25) / 2, rel=1e-14)


@given(st.integers(0, 25), st.just(0.0) | st.floats(0.05, 2.0), st.floats(0.3, 3.0),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_closed_form_h1_matches_quadrature(m, r0, width, p, q):
    if m == 0:
        piece = RadialPiece(r0, r0 + width, 0, coef_const=p, coef_log=q if r0 > 0 else 0)
    else:
        piece = RadialPiece(r0, r0 + width, m, coef_pos=p, coef_neg=q if r0 > 0 else 0)
    closed = _closed_form_h1(piece)
    quad = piece_h1_quadrature(piece)
    assert closed == pytest.approx(quad, rel=1e-8, abs=1e-300)


def test_h1_of_source_piece_uses_quadrature(canonical, mode3_source):
    sol = solve_regularized_mode(canonical, 2.0, 0.1, 3, mode3_source)
    outer = sol.pieces[2]
    assert _closed_form_h1(outer) is None
    # dense trapezoid with 10^5 points as an independent check
    r = np.linspace(outer.r0, outer.r1, 100_001)
    u, du = outer.evaluate(r), outer.derivative(r)
    f = (np.abs(du) ** 2 + 9 * np.abs(u) ** 2 / r ** 2 + np.abs(u) ** 2) * r
    trap = float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(r)))
    assert piece_h1(outer) == pytest.approx(trap, rel=1e-8)


def test_regularized_converges_to_critical(canonical, mode3_source):
    r = np.linspace(0.0, 8.0, 801)
    crit = solve_critical_mode(canonical, 3, mode3_source).evaluate(r)
    dist = [np.max(np.abs(solve_regularized_mode(canonical, 1.0, d, 3, mode3_source).evaluate(r) - crit))
            for d in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(x > y for x, y in zip(dist, dist[1:]))
    # first order in delta
    assert dist[-2] / dist[-1] == pytest.approx(10.0, rel=0.05)


def test_fit_exponent_recovers_power():
    d = np.logspace(-1, -5, 9)
    p, res = fit_exponent(d, 3.0 * d ** -0.75)
    assert p == pytest.approx(0.75, abs=1e-12) and res < 1e-12
    with pytest.raises(ValueError):
        fit_exponent(d[:5], d[:5])


def test_sweep_validation(canonical, in_range_source):
    with pytest.raises(ValueError):
        delta_sweep(canonical, 1.0, in_range_source, deltas=[0.1, 0.05, 0.02, 0.01])
    with pytest.raises(ValueError):
        delta_sweep(canonical, 1.0, in_range_source, deltas=[0.1, 0.01, -1e-3, 1e-4])


def test_sweep_bounded_for_mu_two(canonical):
    src = SourceSpec(2.5, 3.0, AngularSpectrum.parametric(1.0, 2.0, 1.0))
    rep = delta_sweep(canonical, 2.0, src, m_max=32)
    assert all(rep.bounded.values())
    assert abs(rep.exponent) < 0.1


def test_sweep_in_range_is_bounded(canonical, in_range_source):
    rep = delta_sweep(canonical, 1.0, in_range_source, m_max=32)
    assert all(rep.bounded.values())
    assert all(abs(p) < 0.1 for p in rep.exponents.values())


def test_sweep_not_in_range_blows_up_monotonically(canonical):
    src = SourceSpec(2.5, 3.0, AngularSpectrum.parametric(1.0, 1.0, 1.0))
    rep = delta_sweep(canonical, 1.0, src, m_max=32)
    annulus = rep.series("annulus")
    assert np.all(np.diff(annulus) > 0)
    assert not rep.bounded["annulus"] and rep.exponent > 0.5


def test_sweep_threads_give_same_result(canonical, in_range_source):
    serial = delta_sweep(canonical, 1.0, in_range_source, m_max=12)
    threaded = delta_sweep(canonical, 1.0, in_range_source, m_max=12, workers=4)
    assert serial.as_dict() == threaded.as_dict()


def test_singular_system_carries_partial_report(canonical, monkeypatch):
    import indefla.regularized as reg

    real = reg.solve_regularized_mode

    def flaky(geom, mu, delta, m, source):
        if delta < 1e-3:
            raise SingularSystemError("forced")
        return real(geom, mu, delta, m, source)

    monkeypatch.setattr(reg, "solve_regularized_mode", flaky)
    src = SourceSpec(5.0, 6.0, AngularSpectrum.single(2))
    with pytest.raises(SingularSystemError) as info:
        reg.delta_sweep(canonical, 1.0, src)
    partial = info.value.partial
    assert partial is not None and len(partial.norms) == 5
    assert all(d >= 1e-3 for d in partial.deltas)
