import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newton_chaos import (
    Interval,
    critical_structure,
    find_critical_points,
    find_roots,
    make_closed_form,
    make_polynomial,
    verify_newton_class,
)
from newton_chaos.functions import differentiate_coeffs

COEFF = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def test_interval_invariants():
    iv = Interval(1.0, 2.5)
    assert iv.nondegenerate() and iv.width == 1.5 and iv.mid == 1.75
    assert not Interval(2.0, 2.0).nondegenerate()
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)
    with pytest.raises(ValueError):
        Interval(0.0, math.inf)


def test_polynomial_evaluation():
    F = make_polynomial([-1, 0, 1])
    assert F.eval_f(2.0) == 3.0
    assert F.eval_df(2.0) == 4.0
    assert F.eval_ddf(2.0) == 2.0
    quintic = make_polynomial([0, 4, 0, -5, 0, 1])
    assert quintic.eval_f(1.0) == 0.0


def test_polynomial_vectorized_evaluation():
    F = make_polynomial([-1, 0, 1])
    xs = np.array([0.0, 1.0, 2.0])
    assert np.array_equal(F.eval_f(xs), np.array([-1.0, 0.0, 3.0]))


def test_make_polynomial_rejects_bad_coeffs():
    with pytest.raises(ValueError):
        make_polynomial([])
    with pytest.raises(ValueError):
        make_polynomial([1.0, 2.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(
    coeffs=st.lists(COEFF, min_size=2, max_size=6),
    x=st.floats(min_value=-2.0, max_value=2.0),
    h=st.sampled_from([1e-3, 1e-4, 1e-5]),
)
def test_formal_derivative_matches_central_difference(coeffs, x, h):
    if abs(coeffs[-1]) < 0.3:
        coeffs = coeffs[:-1] + [1.0]
    F = make_polynomial(coeffs)
    central = (F.eval_f(x + h) - F.eval_f(x - h)) / (2.0 * h)
    # independent truncation bound: |error| <= max|f'''| h^2/6, plus the
    # cancellation floor of the difference quotient itself
    d3 = coeffs
    for _ in range(3):
        d3 = [i * c for i, c in enumerate(d3)][1:] or [0.0]
    f3max = sum(abs(c) * max(1.0, abs(x) + h) ** i for i, c in enumerate(d3))
    fscale = max(1.0, abs(F.eval_f(x + h)), abs(F.eval_f(x - h)))
    bound = f3max * h * h / 6.0 * 1.01 + 8.0 * np.finfo(float).eps * fscale / h
    assert abs(central - F.eval_df(x)) <= bound


def test_differentiate_coeffs():
    assert differentiate_coeffs([-1.0, 0.0, 1.0]) == (0.0, 2.0)
    assert differentiate_coeffs([5.0]) == (0.0,)


def test_find_roots_parabola():
    F = make_polynomial([-1, 0, 1], Interval(-10, 10))
    roots = find_roots(F, grid_n=10000, tol=1e-12)
    assert len(roots) == 2
    assert abs(roots[0] + 1.0) <= 1e-10 and abs(roots[1] - 1.0) <= 1e-10


def test_find_roots_quintic():
    F = make_polynomial([0, 4, 0, -5, 0, 1], Interval(-10, 10))
    roots = find_roots(F)
    assert len(roots) == 5
    for r, expect in zip(roots, (-2.0, -1.0, 0.0, 1.0, 2.0)):
        assert abs(r - expect) <= 1e-10


def test_find_roots_none():
    F = make_polynomial([1, 0, 1], Interval(-10, 10))
    assert find_roots(F) == []


def test_find_roots_exact_grid_hits():
    # every root of x^3 - x falls exactly on this 5-point grid
    F = make_polynomial([0, -1, 0, 1], Interval(-2, 2))
    roots = find_roots(F, grid_n=5)
    assert roots == [-1.0, 0.0, 1.0]


def test_find_roots_sorted_and_deduplicated(quintic):
    roots = find_roots(quintic)
    assert roots == sorted(roots)
    gaps = [b - a for a, b in zip(roots, roots[1:])]
    assert all(gap > 2e-12 * (1 + abs(b)) for gap, b in zip(gaps, roots[1:]))


def test_find_critical_points_parabola():
    F = make_polynomial([-1, 0, 1], Interval(-10, 10))
    crits = find_critical_points(F)
    assert len(crits) == 1 and abs(crits[0]) <= 1e-10


def test_find_critical_points_cubic():
    F = make_polynomial([0, -3, 0, 1], Interval(-10, 10))
    crits = find_critical_points(F)
    assert len(crits) == 2
    assert abs(crits[0] + 1.0) <= 1e-10 and abs(crits[1] - 1.0) <= 1e-10


def test_find_critical_points_quintic_against_quadratic_formula(quintic):
    # critical points solve 5 t^2 - 15 t + 4 = 0 with t = x^2
    disc = math.sqrt(15.0 * 15.0 - 4.0 * 5.0 * 4.0)
    t1, t2 = (15.0 - disc) / 10.0, (15.0 + disc) / 10.0
    expected = sorted([-math.sqrt(t2), -math.sqrt(t1), math.sqrt(t1), math.sqrt(t2)])
    crits = find_critical_points(quintic)
    assert len(crits) == 4
    for c, e in zip(crits, expected):
        assert abs(c - e) <= 1e-10
    assert abs(crits[0] + crits[3]) <= 1e-10 and abs(crits[1] + crits[2]) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(roots=st.lists(st.floats(min_value=-4.0, max_value=4.0), min_size=2, max_size=5, unique=True))
def test_rolle_interlacing_on_products_of_distinct_roots(roots):
    roots = sorted(roots)
    if min(b - a for a, b in zip(roots, roots[1:])) < 0.1:
        return
    coeffs = np.poly(roots)[::-1].tolist()  # ascending
    F = make_polynomial(coeffs, Interval(-6, 6))
    cs = critical_structure(F)
    assert len(cs.roots) == len(roots)
    assert cs.interlacing_ok


def test_verify_newton_class_accepts_parabola(parab):
    rep = verify_newton_class(parab)
    assert rep.nf2_ok and rep.nf3_ok and rep.witnesses == ()


def test_verify_newton_class_flags_double_root():
    F = make_polynomial([0, 0, 1], Interval(-10, 10))
    rep = verify_newton_class(F)
    assert not rep.nf2_ok
    assert rep.nf3_ok
    assert any(w[0] == "nf2" and abs(w[1]) <= 1e-8 for w in rep.witnesses)


def test_verify_newton_class_flags_flat_critical_point():
    F = make_polynomial([0, 0, 0, 1], Interval(-10, 10))  # x^3
    rep = verify_newton_class(F)
    assert not rep.nf3_ok
    assert any(w[0] == "nf3" and abs(w[1]) <= 1e-8 for w in rep.witnesses)
    # the origin is also a root with vanishing derivative
    assert not rep.nf2_ok


def test_closed_form_function():
    F = make_closed_form(lambda x: x + np.sin(x), lambda x: 1 + np.cos(x),
                         lambda x: -np.sin(x), Interval(-10, 10))
    roots = find_roots(F)
    assert len(roots) == 1 and abs(roots[0]) <= 1e-10
