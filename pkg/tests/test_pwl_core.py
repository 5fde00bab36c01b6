from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iflab.errors import ValidationError
from iflab.fixtures import cantor, triangle
from iflab.pwl_core import (CPLIFS, Interval, PiecewiseLinearMap, check_small, cylinder,
                            image_interval, invariant_interval, level_cylinders, word_from_index)


def two_branch(x):
    # f1 of the triangle written out by hand: rising then falling around 0.5
    return 0.1 + 0.3 * x if x <= 0.5 else 0.25 - 0.3 * (x - 0.5)


def test_interval_basics():
    J = Interval(1, 3)
    assert J.length == 2 and not J.degenerate
    assert Interval(2, 2).degenerate
    assert J.contains(3) and not J.contains(3.1)
    assert J.hull(Interval(-1, 0)) == Interval(-1, 3)
    with pytest.raises(ValidationError):
        Interval(2, 1)


@pytest.mark.parametrize("kwargs", [
    dict(breakpoints=(0.5,), slopes=(0.3,), tau=0),
    dict(breakpoints=(0.5, 0.2), slopes=(0.3, -0.3, 0.3), tau=0),
    dict(breakpoints=(), slopes=(1.0,), tau=0),
    dict(breakpoints=(), slopes=(0.0,), tau=0),
    dict(breakpoints=(0.5,), slopes=(0.3, 0.3), tau=0),
])
def test_map_validation(kwargs):
    with pytest.raises(ValidationError):
        PiecewiseLinearMap(**kwargs)


def test_eval_triangle():
    f1 = triangle()[0]
    assert f1(0) == pytest.approx(0.1, abs=1e-15)
    assert f1(0.5) == pytest.approx(0.25, abs=1e-15)
    assert f1(1.0) == pytest.approx(0.1, abs=1e-15)
    for x in np.linspace(-2, 3, 101):
        assert f1(x) == pytest.approx(two_branch(x), abs=1e-14)


def test_continuity_left_right():
    f1 = triangle()[0]
    eps = 1e-10
    assert abs(f1(0.5 - eps) - f1(0.5 + eps)) < 1e-9


def test_image_interval_examples():
    sim = PiecewiseLinearMap.similarity(Fraction(1, 3), Fraction(0))
    assert image_interval(sim, Interval(Fraction(0), Fraction(1))) == Interval(0, Fraction(1, 3))
    f1 = triangle()[0]
    for lo, hi, want in [(0, 1, (0.1, 0.25)), (0.6, 0.9, (0.13, 0.22))]:
        J = image_interval(f1, Interval(lo, hi))
        grid = [two_branch(x) for x in np.linspace(lo, hi, 10001)]
        assert (J.lo, J.hi) == pytest.approx(want, abs=1e-12)
        assert (J.lo, J.hi) == pytest.approx((min(grid), max(grid)), abs=1e-12)


def hull_oracle(maps, tol=1e-13):
    """Increasing hull iteration on plain callables, images taken on a dense grid."""
    seeds = []
    for f in maps:
        x = 0.0
        for _ in range(200):
            x = f(x)
        seeds.append(x)
    J = [min(seeds), max(seeds)]
    while True:
        xs = np.append(np.linspace(J[0], J[1], 20001), 0.5)
        xs = xs[(xs >= J[0]) & (xs <= J[1])]
        imgs = [np.vectorize(f)(xs) for f in maps]
        new = [min(J[0], *(i.min() for i in imgs)), max(J[1], *(i.max() for i in imgs))]
        if new[0] >= J[0] - tol and new[1] <= J[1] + tol:
            return new
        J = new


def test_invariant_interval_examples():
    assert invariant_interval(cantor(exact=True)) == Interval(0, 1)
    I = invariant_interval(cantor())
    assert (I.lo, I.hi) == pytest.approx((0, 1), abs=1e-15)
    single = CPLIFS([PiecewiseLinearMap.similarity(0.5, 1)])
    I = invariant_interval(single)
    assert I.degenerate and I.lo == pytest.approx(2)
    I = invariant_interval(triangle())
    f2 = lambda x: 0.3 * x + 0.65
    oracle = hull_oracle([two_branch, f2])
    assert (I.lo, I.hi) == pytest.approx(oracle, abs=1e-9)
    assert (I.lo, I.hi) == pytest.approx((17 / 140, 13 / 14), abs=1e-11)


def test_invariant_interval_fixed_point_of_iteration():
    sys = triangle()
    I = invariant_interval(sys)
    hull = I.hull(*(image_interval(f, I) for f in sys))
    assert hull.lo == pytest.approx(I.lo, abs=1e-12) and hull.hi == pytest.approx(I.hi, abs=1e-12)
    for f in sys:
        assert I.contains(f.fixed_point())


def test_invariant_interval_tol():
    with pytest.raises(ValidationError):
        invariant_interval(cantor(), tol=0)


def test_cylinder_examples():
    s = cantor(exact=True)
    I = invariant_interval(s)
    assert cylinder(s, (1, 2), I) == Interval(Fraction(2, 9), Fraction(1, 3))
    assert cylinder(s, (), I) == I
    t = triangle()
    I = invariant_interval(t)
    J = cylinder(t, (1,), I)
    grid = [two_branch(x) for x in np.append(np.linspace(I.lo, I.hi, 10001), 0.5)]
    assert (J.lo, J.hi) == pytest.approx((min(grid), max(grid)), abs=1e-9)


def test_check_small_examples():
    rep = check_small(cantor())
    assert rep.small and rep.sum_rho == pytest.approx(2 / 3)
    big = CPLIFS([PiecewiseLinearMap.similarity(0.6, 0), PiecewiseLinearMap.similarity(0.6, 1)])
    assert not check_small(big).small
    rep = check_small(triangle())
    assert rep.small
    assert rep.per_map_injective == [False, True] or tuple(rep.per_map_injective) == (False, True)
    assert rep.per_map_bound[0][0] == pytest.approx(0.35)
    assert rep.per_map_bound[1][0] == pytest.approx(0.5)
    # a non-injective map with rho = 0.36 breaks the (1 - rho_max)/2 bound
    tent = CPLIFS([PiecewiseLinearMap((0.5,), (0.36, -0.36), 0)])
    assert not check_small(tent).small


def test_derived_statistics():
    t = triangle()
    assert t.type_vector == (1, 0) and t.L == 1 and t.m == 2
    assert t.rho_max == 0.3 and t.rho_min == 0.3
    assert t.breakpoint_ids() == [(1, 1)]


def test_level_cylinders_match_cylinder(triangle):
    I = invariant_interval(triangle)
    lo, hi = level_cylinders(triangle, 4, I)
    for idx in range(len(lo)):
        J = cylinder(triangle, word_from_index(idx, 4, 2), I)
        assert (lo[idx], hi[idx]) == pytest.approx((J.lo, J.hi), abs=1e-14)


def test_cylinder_nesting_and_contraction(triangle):
    I = invariant_interval(triangle)
    rho = triangle.rho_per_map
    for n in range(1, 6):
        for idx in range(2 ** n):
            w = word_from_index(idx, n, 2)
            J = cylinder(triangle, w, I)
            assert J.length <= np.prod([rho[k - 1] for k in w]) * I.length + 1e-15
            for j in (1, 2):
                assert J.contains_interval(cylinder(triangle, w + (j,), I), 1e-12)


@st.composite
def random_maps(draw):
    n_bp = draw(st.integers(0, 4))
    bps = sorted(draw(st.lists(st.floats(-3, 3), min_size=n_bp, max_size=n_bp, unique=True)))
    if any(b - a < 1e-3 for a, b in zip(bps, bps[1:])):
        bps = [float(i) for i in range(n_bp)]
    slopes = []
    for _ in range(n_bp + 1):
        r = draw(st.floats(0.05, 0.9)) * draw(st.sampled_from([-1, 1]))
        if slopes and r == slopes[-1]:
            r = -r
        slopes.append(r)
    tau = draw(st.floats(-2, 2))
    return PiecewiseLinearMap(tuple(bps), tuple(slopes), tau)


@settings(max_examples=60, deadline=None)
@given(random_maps(), st.floats(-4, 4), st.floats(0, 4))
def test_image_interval_matches_grid(f, lo, width):
    J = Interval(lo, lo + width)
    img = image_interval(f, J)
    # the grid is augmented with the breakpoints inside J, where extrema sit
    xs = np.concatenate([np.linspace(J.lo, J.hi, 10001),
                         [b for b in f.breakpoints if J.lo <= b <= J.hi]])
    vals = [f(x) for x in xs]
    assert img.lo == pytest.approx(min(vals), abs=1e-9)
    assert img.hi == pytest.approx(max(vals), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(random_maps())
def test_continuity_at_breakpoints(f):
    assert f(0) == pytest.approx(f.tau, abs=1e-12)
    for i, b in enumerate(f.breakpoints):
        left = f.slopes[i] * b + f.translations[i]
        right = f.slopes[i + 1] * b + f.translations[i + 1]
        assert left == pytest.approx(right, abs=1e-12)
