import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from indefla import AnnularGeometry, Contrast, ContrastError, GeometryError, ScaledValue, critical_radius
from indefla.core import one_minus_ratio_pow, scaled_ratio_pow

positive = st.floats(1e-3, 1e3)


def test_critical_radius_examples():
    assert critical_radius(AnnularGeometry(1, 2, 8)) == 4
    assert AnnularGeometry(2, 2 * math.sqrt(2), 16).critical_radius == pytest.approx(4, rel=1e-15)


@pytest.mark.parametrize("radii", [(1, 1, 2), (2, 1, 3), (1, 2, 2), (0, 1, 2), (-1, 1, 2), (1, 2, math.inf)])
def test_geometry_rejects_invalid(radii):
    with pytest.raises(GeometryError):
        AnnularGeometry(*radii)


def test_geometry_scaling_keeps_ratios():
    g = AnnularGeometry(1, 2, 8).scaled(3)
    assert (g.r_i, g.r_e, g.R) == (3, 6, 24)
    assert g.critical_radius == 12


def test_contrast():
    assert Contrast(1.0).critical
    assert not Contrast(1.0 + 1e-15).critical
    assert Contrast(2.0, 0.1).coefficients() == (complex(-2, 0.1), complex(1, 0.1), complex(-2, 0.1))
    with pytest.raises(ContrastError):
        Contrast(0.0)
    with pytest.raises(ContrastError):
        Contrast(1.0, -0.1)


def test_scaled_ratio_pow_examples():
    assert scaled_ratio_pow(2, 1, 3) == 8
    assert scaled_ratio_pow(3.7, 0.2, 0) == 1
    assert scaled_ratio_pow(3, 2, 200).log2_abs() == pytest.approx(200 * math.log2(1.5), rel=1e-13)
    assert scaled_ratio_pow(3, 2, 2000).log2_abs() == pytest.approx(2000 * math.log2(1.5), rel=1e-13)
    with pytest.raises(ValueError):
        scaled_ratio_pow(-1, 2, 3)


@given(positive, positive, st.integers(0, 500))
def test_scaled_ratio_pow_reciprocal(x, y, k):
    prod = scaled_ratio_pow(x, y, k) * scaled_ratio_pow(y, x, k)
    assert prod.to_float() == pytest.approx(1.0, rel=1e-12)


@given(st.floats(-1e300, 1e300, allow_nan=False))
def test_scaled_roundtrip(x):
    s = ScaledValue.from_float(x)
    assert s.to_float() == x
    if x:
        assert 1.0 <= s.mantissa < 2.0


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_scaled_arithmetic_matches_floats(x, y):
    a, b = ScaledValue.from_float(x), ScaledValue.from_float(y)
    assert (a * b).to_float() == pytest.approx(x * y, rel=1e-15, abs=0)
    assert (a + b).to_float() == pytest.approx(x + y, rel=1e-15, abs=1e-300)
    assert (a - b).to_float() == pytest.approx(x - y, rel=1e-15, abs=1e-300)
    if y:
        assert (a / b).to_float() == pytest.approx(x / y, rel=1e-15)
    assert (a < b) == (x < y)


def test_scaled_range_beyond_double():
    big = ScaledValue.from_float(10.0) ** 400
    assert big.log2_abs() == pytest.approx(400 * math.log2(10), rel=1e-14)
    with pytest.raises(OverflowError):
        big.to_float()
    val, flag = big.to_float_clamped()
    assert flag and val == 1.7976931348623157e308
    tiny = ScaledValue.one() / big
    assert tiny.to_float() == 0.0
    assert (big * tiny).to_float() == pytest.approx(1.0, rel=1e-12)


def test_scaled_addition_flushes_negligible_terms():
    big = ScaledValue.from_log2(300.0)
    assert big + ScaledValue.one() == big
    assert ScaledValue.zero() + big == big
    assert (big - big).sign == 0


def test_one_minus_ratio_pow_is_accurate_for_small_powers():
    assert one_minus_ratio_pow(1.0, 1.0 + 1e-12, 1) == pytest.approx(1e-12, rel=1e-3)
    assert one_minus_ratio_pow(1, 2, 3) == pytest.approx(7 / 8, rel=1e-15)
