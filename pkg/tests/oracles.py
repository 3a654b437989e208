"""High-precision reference computations, independent of the package.

Everything here uses mpmath at 50 digits with the raw radial bases
``r**k, r**-k`` (or ``1, ln r``) and generic linear algebra, none of the
package's normalized pieces or scaled arithmetic.  Values produced here are
frozen into ``test_frozen_values.py``; running this module prints them.
"""
from __future__ import annotations

import mpmath as mp

mp.mp.dps = 50


def _basis(k):
    if k == 0:
        return (lambda r: mp.mpf(1)), (lambda r: mp.log(r)), (lambda r: mp.mpf(0)), (lambda r: 1 / r)
    return (lambda r: r ** k), (lambda r: r ** (-k)), (lambda r: k * r ** (k - 1)), (lambda r: -k * r ** (-k - 1))


def annulus_harmonic(k, lo, hi, v_lo, v_hi):
    """Coefficients (alpha, beta) of the harmonic mode with the given end values."""
    p, q, _, _ = _basis(k)
    A = mp.matrix([[p(lo), q(lo)], [p(hi), q(hi)]])
    return mp.lu_solve(A, mp.matrix([v_lo, v_hi]))


def dtn_blocks(m, ri, re, R):
    """(B, C) as mpmath matrices: outward normal derivatives for unit traces."""
    k = abs(m)
    ri, re, R = mp.mpf(ri), mp.mpf(re), mp.mpf(R)
    _, _, dp, dq = _basis(k)
    B = mp.matrix(2, 2)
    for j, data in enumerate(((1, 0), (0, 1))):
        al, be = annulus_harmonic(k, ri, re, *data)
        B[0, j] = -(al * dp(ri) + be * dq(ri))
        B[1, j] = al * dp(re) + be * dq(re)
    C = mp.matrix(2, 2)
    C[0, 0] = mp.mpf(0) if k == 0 else k / ri
    al, be = annulus_harmonic(k, re, R, 1, 0)
    C[1, 1] = -(al * dp(re) + be * dq(re))
    return B, C


def neumann_trace(m, re, R, a, b, h=1):
    """``f'(r_e)`` for ``f'' + f'/r - k^2 f / r^2 = h 1_(a,b)``, ``f(r_e) = f(R) = 0``."""
    k = abs(m)
    re, R, a, b = (mp.mpf(x) for x in (re, R, a, b))
    if k == 0:
        u1, du1 = (lambda r: mp.log(r / re)), (lambda r: 1 / r)
        u2, du2 = (lambda r: mp.log(r / R)), (lambda r: 1 / r)
    else:
        u1 = lambda r: (r / re) ** k - (re / r) ** k
        du1 = lambda r: k * ((r / re) ** k + (re / r) ** k) / r
        u2 = lambda r: (r / R) ** k - (R / r) ** k
        du2 = lambda r: k * ((r / R) ** k + (R / r) ** k) / r
    s0 = (a + b) / 2
    C = s0 * (u1(s0) * du2(s0) - du1(s0) * u2(s0))
    integral = mp.quad(lambda s: u2(s) * s, [a, b])
    return h * du1(re) * integral / C


def difference_inverse(m, ri, re, R, mu=1):
    B, C = dtn_blocks(m, ri, re, R)
    return mp.inverse(B - mu * C)


def series_term(m, ri, re, R, a, b, h=1):
    """``(1/|m|) |h|^2 ||D_m^{-1} (0, f'_m(r_e))||^2``."""
    fp = neumann_trace(m, re, R, a, b, h)
    Dinv = difference_inverse(m, ri, re, R)
    x = Dinv * mp.matrix([0, fp])
    return (x[0] ** 2 + x[1] ** 2) / abs(m)


def theta_eigs(m, ri, re, R, mu=1):
    B, C = dtn_blocks(m, ri, re, R)
    k = abs(m)
    ri, re = mp.mpf(ri), mp.mpf(re)
    wi, we = mp.sqrt((k / ri) ** 2 + 1), mp.sqrt((k / re) ** 2 + 1)
    T = (B - mu * C) * mp.diag([wi / 2, we / 2])
    ev = mp.eig(T)[0]
    return sorted((mp.re(e) for e in ev), key=lambda x: -abs(x))


def regularized_values(m, ri, re, R, mu, delta, a, b, h, radii):
    """Mode ``m`` of the regularized solution at ``radii``, by a raw 6x6 solve plus a quadrature particular part."""
    k = abs(m)
    ri, re, R, a, b = (mp.mpf(x) for x in (ri, re, R, a, b))
    c1 = mp.mpc(-mu, delta)
    c2 = mp.mpc(1, delta)
    p, q, dp, dq = _basis(k)
    # particular part on (r_e, R): w'' + w'/r - k^2 w/r^2 = -h/c1 on (a, b), w(r_e) = w(R) = 0
    if k == 0:
        u1, du1 = (lambda r: mp.log(r / re)), (lambda r: 1 / r)
        u2, du2 = (lambda r: mp.log(r / R)), (lambda r: 1 / r)
    else:
        u1 = lambda r: (r / re) ** k - (re / r) ** k
        du1 = lambda r: k * ((r / re) ** k + (re / r) ** k) / r
        u2 = lambda r: (r / R) ** k - (R / r) ** k
        du2 = lambda r: k * ((r / R) ** k + (R / r) ** k) / r
    s0 = (a + b) / 2
    W = s0 * (u1(s0) * du2(s0) - du1(s0) * u2(s0))
    amp = -h / c1

    def part(r):
        lo_hi = [a, min(max(r, a), b)]
        left = mp.quad(lambda s: u1(s) * s, lo_hi) if lo_hi[1] > lo_hi[0] else 0
        hi_lo = [max(min(r, b), a), b]
        right = mp.quad(lambda s: u2(s) * s, hi_lo) if hi_lo[1] > hi_lo[0] else 0
        return amp * (u2(r) * left + u1(r) * right) / W

    dpart_re = amp * du1(re) * mp.quad(lambda s: u2(s) * s, [a, b]) / W
    # unknowns: inner A1 p; annulus A2 p + B2 q; outer A3 p + B3 q (+ particular)
    M = mp.matrix(5, 5)
    rhs = mp.matrix(5, 1)
    # continuity at r_i
    M[0, 0], M[0, 1], M[0, 2] = p(ri), -p(ri), -q(ri)
    # flux at r_i
    M[1, 0], M[1, 1], M[1, 2] = c1 * dp(ri), -c2 * dp(ri), -c2 * dq(ri)
    # continuity at r_e
    M[2, 1], M[2, 2], M[2, 3], M[2, 4] = p(re), q(re), -p(re), -q(re)
    # flux at r_e
    M[3, 1], M[3, 2], M[3, 3], M[3, 4] = c2 * dp(re), c2 * dq(re), -c1 * dp(re), -c1 * dq(re)
    rhs[3] = c1 * dpart_re
    # Dirichlet at R
    M[4, 3], M[4, 4] = p(R), q(R)
    # regularity at the origin: the inner region carries only p (r**k, or 1 for k = 0)
    x = mp.lu_solve(M, rhs)
    A1, A2, B2, A3, B3 = x
    out = []
    for r in radii:
        r = mp.mpf(r)
        if r <= ri:
            out.append(A1 * p(r))
        elif r <= re:
            out.append(A2 * p(r) + B2 * q(r))
        else:
            out.append(A3 * p(r) + B3 * q(r) + part(r))
    return out


def critical_values(m, ri, re, R, a, b, h, radii):
    """Mode ``m`` of the critical solution, by the same raw system with ``mu = 1, delta = 0``."""
    return regularized_values(m, ri, re, R, 1, 0, a, b, h, radii)


def _fmt(x):
    return mp.nstr(x, 17)


if __name__ == "__main__":  # pragma: no cover
    print("B1, C1 (1,2,4):", dtn_blocks(1, 1, 2, 4))
    print("f'_1 (2,4,3,4):", _fmt(neumann_trace(1, 2, 4, 3, 4)))
    for m in (0, 2, 7, 25):
        print(f"f'_{m} (r_e=2, R=8, a=5, b=6):", _fmt(neumann_trace(m, 2, 8, 5, 6)))
    for m in (1, 5, 10, 40):
        for a, b in ((5, 6), (2.5, 3)):
            print(f"term m={m} a={a}:", _fmt(mp.log10(series_term(m, 1, 2, 8, a, b))))
    for m in (0, 5, 15, 30):
        print(f"theta m={m}:", [_fmt(e) for e in theta_eigs(m, 1, 2, 8)])
    for m in (20, 40):
        print(f"theta mu=2 m={m}:", [_fmt(e) for e in theta_eigs(m, 1, 2, 8, mu=2)])
    radii = (0.5, 1.5, 2.0, 3.0, 5.5, 7.0)
    print("reg mu=2 d=0.1 m=3:", [_fmt(v) for v in regularized_values(3, 1, 2, 8, 2, 0.1, 5, 6, 1, radii)])
    print("reg mu=1 d=1e-3 m=0:", [_fmt(v) for v in regularized_values(0, 1, 2, 8, 1, 1e-3, 5, 6, 1, radii)])
    print("crit m=3:", [_fmt(v) for v in critical_values(3, 1, 2, 8, 5, 6, 1, radii)])
