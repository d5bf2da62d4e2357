from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ringout.profiles import (
    ExplicitList,
    PointMass,
    QuarterCircle,
    RingGeometry,
    Uniform,
    parse_profile,
    profile_from_json,
    realize,
    ring_radii,
    second_moment,
    stieltjes,
    stieltjes_diagnostic,
)


def test_second_moment_point_mass():
    assert second_moment(PointMass(1.0)) == pytest.approx(1.0)


def test_second_moment_uniform_closed_form():
    lo, hi = 0.5, 4.0
    assert second_moment(Uniform(lo, hi)) == pytest.approx((hi**3 - lo**3) / (3 * (hi - lo)))
    assert second_moment(Uniform(lo, hi)) == pytest.approx(63.875 / 10.5)


def test_second_moment_quarter_circle_against_quadrature():
    dens = lambda x: x * x * math.sqrt(4 - x * x) / math.pi  # noqa: E731
    oracle, _ = integrate.quad(dens, 0, 2, epsabs=1e-13)
    assert second_moment(QuarterCircle()) == pytest.approx(oracle, abs=1e-10)
    assert oracle == pytest.approx(1.0, abs=1e-10)


def test_ring_radii_examples():
    pm = ring_radii(PointMass(1.0))
    assert (pm.a, pm.b) == pytest.approx((1.0, 1.0))
    u = ring_radii(Uniform(0.5, 4.0))
    assert u.a == pytest.approx(math.sqrt(2), abs=1e-12)
    assert u.b == pytest.approx(2.46644, abs=1e-5)
    qc = ring_radii(QuarterCircle())
    assert qc.a == 0.0
    assert qc.b == pytest.approx(1.0, abs=1e-10)


def test_uniform_inverse_moment_closed_form():
    lo, hi = 0.5, 4.0
    assert Uniform(lo, hi).inverse_second_moment() == pytest.approx((1 / lo - 1 / hi) / (hi - lo))


def test_realize_examples():
    assert realize(PointMass(2.0), 3).tolist() == [2.0, 2.0, 2.0]
    assert realize(Uniform(0.5, 4.0), 2) == pytest.approx([1.375, 3.125])
    assert realize(ExplicitList((1.0, 3.0, 2.0)), 3).tolist() == [1.0, 2.0, 3.0]


def test_quarter_circle_quantiles_match_cdf():
    qc = QuarterCircle()
    vals = realize(qc, 50)
    u = (np.arange(1, 51) - 0.5) / 50
    cdf = lambda x: integrate.quad(lambda t: math.sqrt(4 - t * t) / math.pi, 0, x)[0]  # noqa: E731
    assert [cdf(v) for v in vals] == pytest.approx(u.tolist(), abs=1e-10)
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("profile", [Uniform(0.5, 4.0), Uniform(1.0, 2.0), ExplicitList((0.5, 1.0, 3.0))])
@pytest.mark.parametrize("n", [30, 300, 3000])
def test_realized_second_moment_converges(profile, n):
    s = realize(profile, n)
    b2 = second_moment(profile)
    assert abs(np.mean(s * s) - b2) <= 5 * b2 / n


def test_stieltjes_examples():
    assert stieltjes([1.0], 1j) == pytest.approx((-1 - 1j) / 2)
    assert stieltjes([1.0, 1.0], 2j) == pytest.approx((-1 - 2j) / 5)
    assert stieltjes([1.0, 2.0], 1 + 1j) == pytest.approx(-0.25 - 0.75j)


def test_stieltjes_rejects_real_axis():
    with pytest.raises(ValueError):
        stieltjes([1.0], 1.0 + 0j)


def test_stieltjes_diagnostic_is_positive():
    d = stieltjes_diagnostic(realize(Uniform(0.5, 4), 100), np.linspace(0, 5, 11), 0.05)
    assert d.shape == (11,)
    assert np.all(d > 0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0.01, 50.0), min_size=1, max_size=20),
    st.floats(-10, 10),
    st.floats(1e-3, 10),
)
def test_stieltjes_imaginary_part_negative(values, x, y):
    assert stieltjes(values, complex(x, y)).imag < 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=30))
def test_ring_radii_ordered(values):
    ring = ring_radii(ExplicitList(tuple(values)))
    assert 0 <= ring.a <= ring.b


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.01, 10.0))
def test_uniform_radii_ordered(x, y):
    lo, hi = min(x, y), max(x, y)
    if hi - lo < 1e-6:
        return
    ring = ring_radii(Uniform(lo, hi))
    assert ring.a <= ring.b + 1e-12


def test_invalid_profiles():
    with pytest.raises(ValueError):
        Uniform(0.0, 1.0)
    with pytest.raises(ValueError):
        Uniform(2.0, 1.0)
    with pytest.raises(ValueError):
        ExplicitList((1.0, 0.0))
    with pytest.raises(ValueError):
        PointMass(-1.0)
    with pytest.raises(ValueError):
        RingGeometry(2.0, 1.0)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("uniform:0.5,4", Uniform(0.5, 4.0)),
        ("quarter_circle", QuarterCircle()),
        ("quarter-circle", QuarterCircle()),
        ("point_mass:2", PointMass(2.0)),
        ("explicit:1,2,3", ExplicitList((1.0, 2.0, 3.0))),
    ],
)
def test_parse_profile(text, expected):
    prof = parse_profile(text)
    assert prof == expected
    assert profile_from_json(prof.to_json()) == prof


@pytest.mark.parametrize("text", ["uniform:1", "gauss:1,2", "point_mass", ""])
def test_parse_profile_rejects(text):
    with pytest.raises(ValueError):
        parse_profile(text)
