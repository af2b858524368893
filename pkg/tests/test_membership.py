import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzrisk.errors import (
    DegenerateWeightsError,
    EmptySupportError,
    InvalidInputError,
    InvalidResolutionError,
)
from fuzzrisk.membership import (
    Gaussian,
    GeneralizedBell,
    Interval,
    Sampled,
    Sigmoid,
    Trapezoid,
    Triangle,
    Universe,
    blend,
    core,
    evaluate,
    mf_from_dict,
    mf_to_dict,
    sample,
    support,
)

FUEL = Trapezoid(20.5, 28, 40, 40)


def scan(mf, universe, keep, n=100001):
    """Grid-scan oracle: [first, last] grid point satisfying ``keep``."""
    xs = np.linspace(universe.lo, universe.hi, n)
    hit = np.flatnonzero(keep(mf(xs)))
    if hit.size == 0:
        return None
    return xs[hit[0]], xs[hit[-1]]


class TestEvaluate:
    @pytest.mark.parametrize("x, expected", [(33, 1.0), (18, 0.0), (25, 0.6)])
    def test_fuel_economy(self, x, expected):
        assert evaluate(FUEL, x) == pytest.approx(expected, abs=1e-9)

    def test_fuel_ramp_start_solves_partial_degree(self):
        # (25 - a) / (28 - a) = 0.6  =>  a = (25 - 0.6 * 28) / 0.4
        assert (25 - 0.6 * 28) / 0.4 == pytest.approx(FUEL.a)

    def test_triangle_apex_and_gaussian_peak(self):
        assert evaluate(Triangle(0, 1, 2), 1) == 1.0
        assert evaluate(Gaussian(5, 2), 5) == 1.0

    @pytest.mark.parametrize("x", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, x):
        with pytest.raises(InvalidInputError):
            evaluate(Triangle(0, 1, 2), x)

    def test_closed_forms(self):
        assert evaluate(Gaussian(1, 2), 3) == pytest.approx(math.exp(-4 / 8))
        assert evaluate(GeneralizedBell(2, 3, 1), 2) == pytest.approx(1 / (1 + 0.5**6))
        assert evaluate(Sigmoid(2, 1), 1.5) == pytest.approx(1 / (1 + math.exp(-1)))

    def test_shoulders(self):
        left = Trapezoid(0, 0, 1, 2)
        assert evaluate(left, 0) == 1.0
        assert evaluate(left, 1.5) == 0.5
        assert evaluate(left, -0.1) == 0.0
        right = Triangle(0, 2, 2)
        assert evaluate(right, 2) == 1.0
        assert evaluate(right, 1) == 0.5

    def test_sampled_interpolates_and_refuses_outside(self):
        s = Sampled.from_pairs(Universe(0, 2), [(0, 0), (1, 1), (2, 0)])
        assert evaluate(s, 0.25) == 0.25
        with pytest.raises(InvalidInputError):
            evaluate(s, 2.5)

    @pytest.mark.parametrize(
        "ctor, args",
        [
            (Triangle, (2, 1, 3)),
            (Triangle, (1, 1, 1)),
            (Trapezoid, (0, 2, 1, 3)),
            (Trapezoid, (1, 1, 1, 1)),
            (Gaussian, (0, 0)),
            (GeneralizedBell, (0, 1, 0)),
            (GeneralizedBell, (1, -1, 0)),
            (Sigmoid, (math.nan, 0)),
        ],
    )
    def test_invalid_parameters(self, ctor, args):
        with pytest.raises(InvalidInputError):
            ctor(*args)

    def test_universe_requires_lo_below_hi(self):
        with pytest.raises(InvalidInputError):
            Universe(1, 1)


def _shapes():
    ordered = st.lists(st.floats(-50, 50), min_size=4, max_size=4).map(sorted)
    tri = ordered.filter(lambda p: p[0] < p[3]).map(lambda p: Triangle(p[0], p[1], p[3]))
    trap = ordered.filter(lambda p: p[0] < p[3]).map(lambda p: Trapezoid(*p))
    gauss = st.builds(Gaussian, st.floats(-50, 50), st.floats(0.01, 30))
    bell = st.builds(GeneralizedBell, st.floats(0.01, 30), st.floats(0.1, 10), st.floats(-50, 50))
    sig = st.builds(Sigmoid, st.floats(-20, 20), st.floats(-50, 50))
    return st.one_of(tri, trap, gauss, bell, sig)


@settings(max_examples=200, deadline=None)
@given(_shapes(), st.integers(0, 2**32 - 1))
def test_degrees_always_in_unit_interval(mf, seed):
    xs = np.random.default_rng(seed).uniform(-200, 200, 10_000)
    ys = mf(xs)
    assert np.all((ys >= 0.0) & (ys <= 1.0))


class TestSupport:
    U = Universe(0, 10)

    def test_trapezoid(self):
        assert support(Trapezoid(1, 2, 3, 4), self.U) == Interval(1, 4)

    def test_triangle(self):
        assert support(Triangle(1, 2, 3), self.U) == Interval(1, 3)

    def test_gaussian_matches_grid_scan(self):
        mf = Gaussian(5, 1)
        got = support(mf, self.U)
        lo, hi = scan(mf, self.U, lambda d: d > 1e-12)
        step = self.U.span / 100000
        assert got.lo == pytest.approx(lo, abs=step)
        assert got.hi == pytest.approx(hi, abs=step)

    def test_bell_and_sigmoid_match_grid_scan(self):
        U = Universe(-30, 30)
        step = U.span / 100000
        for mf in (GeneralizedBell(0.5, 3, 2), Sigmoid(1.5, 4), Sigmoid(-2, -3)):
            got = support(mf, U)
            lo, hi = scan(mf, U, lambda d: d > 1e-12)
            assert got.lo == pytest.approx(lo, abs=step)
            assert got.hi == pytest.approx(hi, abs=step)

    def test_unbounded_tails_clip_to_universe(self):
        assert support(Gaussian(5, 10), self.U) == Interval(0, 10)

    def test_empty(self):
        with pytest.raises(EmptySupportError):
            support(Triangle(20, 21, 22), self.U)
        with pytest.raises(EmptySupportError):
            support(Triangle(-2, -1, 0), self.U)

    def test_sampled(self):
        s = sample(Triangle(2, 4, 6), self.U, 11)
        got = support(s, self.U)
        # the cut-off sits where the interpolated ramp crosses 1e-12
        assert got.lo == pytest.approx(2, abs=1e-9) and got.lo > 2
        assert got.hi == pytest.approx(6, abs=1e-9) and got.hi < 6


class TestCore:
    U = Universe(0, 10)

    def test_trapezoid_and_triangle(self):
        assert core(Trapezoid(1, 2, 3, 4), self.U) == Interval(2, 3)
        assert core(Triangle(1, 2, 3), self.U) == Interval(2, 2)

    def test_sigmoid_matches_grid_scan(self):
        U = Universe(-10, 10)
        step = U.span / 100000
        # a=2: the curve only reaches 1 - 2.06e-9 at x=10, so no point qualifies
        assert core(Sigmoid(2, 0), U) is None
        assert scan(Sigmoid(2, 0), U, lambda d: d >= 1 - 1e-9) is None
        got = core(Sigmoid(3, 0), U)
        lo, hi = scan(Sigmoid(3, 0), U, lambda d: d >= 1 - 1e-9)
        assert got.lo == pytest.approx(lo, abs=step)
        assert got.hi == hi == 10

    def test_gaussian_core_is_narrow(self):
        got = core(Gaussian(5, 1), self.U)
        lo, hi = scan(Gaussian(5, 1), self.U, lambda d: d >= 1 - 1e-9)
        assert got.lo == pytest.approx(lo, abs=1e-4)
        assert got.hi == pytest.approx(hi, abs=1e-4)

    @settings(max_examples=100, deadline=None)
    @given(_shapes())
    def test_core_within_support(self, mf):
        U = Universe(-60, 60)
        c = core(mf, U)
        if c is not None:
            assert support(mf, U).contains(c)


class TestSample:
    def test_triangle(self):
        s = sample(Triangle(0, 1, 2), Universe(0, 2), 3)
        assert s.values == [(0, 0), (1, 1), (2, 0)]

    def test_two_points_are_endpoints(self):
        s = sample(Gaussian(3, 1), Universe(-1, 7), 2)
        assert s.points.tolist() == [-1, 7]

    def test_matches_pointwise_evaluate(self):
        mf = Gaussian(1, 1)
        s = sample(mf, Universe(0, 2), 5)
        for x, d in s.values:
            assert d == evaluate(mf, x)

    def test_resolution(self):
        with pytest.raises(InvalidResolutionError):
            sample(Triangle(0, 1, 2), Universe(0, 2), 1)

    @settings(max_examples=100, deadline=None)
    @given(_shapes().filter(lambda m: isinstance(m, (Triangle, Trapezoid))), st.integers(2, 300))
    def test_piecewise_linear_round_trip(self, mf, n):
        U = Universe(-60, 60)
        s = sample(mf, U, n)
        np.testing.assert_allclose(s(s.points), mf(s.points), atol=1e-12)


class TestBlend:
    U = Universe(0, 3)

    def test_single_identity(self):
        mf = Triangle(0, 1, 2)
        assert blend([mf], [1.0], self.U, 31) == sample(mf, self.U, 31)

    def test_identical_opinions(self):
        mf = Triangle(0, 1, 2)
        b = blend([mf, mf], [0.3, 0.7], self.U, 31)
        np.testing.assert_allclose(b.degrees, sample(mf, self.U, 31).degrees, atol=1e-15)

    def test_hand_average(self):
        b = blend([Triangle(0, 1, 2), Triangle(1, 2, 3)], [1, 1], self.U, 31)
        assert evaluate(b, 1) == pytest.approx(0.5)

    def test_errors(self):
        mf = Triangle(0, 1, 2)
        with pytest.raises(DegenerateWeightsError):
            blend([mf, mf], [0, 0], self.U, 11)
        with pytest.raises(DegenerateWeightsError):
            blend([mf, mf], [-1, 2], self.U, 11)
        with pytest.raises(InvalidInputError):
            blend([mf, mf], [1], self.U, 11)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(0.0, 10.0), min_size=3, max_size=3).filter(lambda w: sum(w) > 0.01),
        st.floats(1e-3, 1e3),
    )
    def test_normalization_invariance(self, weights, k):
        mfs = [Triangle(0, 1, 2), Gaussian(1.5, 0.5), Trapezoid(0.5, 1, 2, 3)]
        a = blend(mfs, weights, self.U, 101)
        b = blend(mfs, [w * k for w in weights], self.U, 101)
        np.testing.assert_allclose(a.degrees, b.degrees, atol=1e-12)


def test_serialization_round_trip():
    for mf in (Triangle(0, 1, 2), Trapezoid(0, 1, 2, 3), Gaussian(1, 2), GeneralizedBell(1, 2, 3), Sigmoid(1, 2)):
        assert mf_from_dict(mf_to_dict(mf)) == mf
    with pytest.raises(InvalidInputError):
        mf_from_dict({"shape": "triangle", "params": [0, 1]})
    with pytest.raises(InvalidInputError):
        mf_from_dict({"shape": "hexagon", "params": []})
    with pytest.raises(InvalidInputError):
        mf_to_dict(sample(Triangle(0, 1, 2), Universe(0, 2), 3))
