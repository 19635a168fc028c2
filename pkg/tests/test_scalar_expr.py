import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasaki_tube_verify.catalog import list_manifolds, load_manifold
from sasaki_tube_verify.chart_geometry import sample_box
from sasaki_tube_verify.exceptions import ArityError, DomainError, ExpressionSyntaxError
from sasaki_tube_verify.scalar_expr import (
    central_difference,
    const,
    coord,
    differentiate,
    evaluate,
    grid_program,
    parse_expr,
    simplify,
    sin,
    substitute,
    to_text,
)

MANIFEST_TEXTS = [
    "(1 + 0.1*sin(x1))^2",
    "-1/cos(x2)",
    "exp(0.6*x1)",
    "1/x2^2",
    "cos(x2)^2",
    "x1*x2 - 3*x1 + pi",
]


def test_parse_and_evaluate_metric_entry():
    e = parse_expr("cos(x2)^2", 2)
    assert evaluate(e, (0.3, 0.2), dim=2) == pytest.approx(math.cos(0.2) ** 2, abs=1e-15)


def test_pi_is_a_constant():
    assert evaluate(parse_expr("pi/2"), ()) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("text", MANIFEST_TEXTS)
def test_text_form_reparses_to_the_same_tree(text):
    e = parse_expr(text, 2)
    assert parse_expr(to_text(e), 2) == e


def test_derivative_of_cube():
    e = parse_expr("x1^3", 1)
    assert evaluate(differentiate(e, 0), (2.0,)) == pytest.approx(12.0)
    assert differentiate(e, 1).is_zero()


def test_derivative_matches_central_difference():
    e = parse_expr("sin(x1)*exp(x2) + x1/x2", 2)
    p = (0.3, 0.7)
    for i in range(2):
        exact = evaluate(differentiate(e, i), p)
        assert exact == pytest.approx(central_difference(e, i, p), abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(-3, 3, allow_nan=False),
    b=st.floats(-3, 3, allow_nan=False),
    x=st.floats(-1, 1, allow_nan=False),
)
def test_polynomial_trig_derivative(a, b, x):
    e = const(a) * coord(0) ** 2 + const(b) * sin(coord(0))
    expected = 2 * a * x + b * math.cos(x)
    assert evaluate(differentiate(e, 0), (x,)) == pytest.approx(expected, abs=1e-12)


def test_simplify_drops_zero_and_unit_factors():
    assert simplify(parse_expr("0*x1 + 1*x2", 2)) == coord(1)


def test_substitute_fixes_coordinates():
    e = substitute(parse_expr("x1*x2", 2), {1: 2.0})
    assert 1 not in e.coords
    assert evaluate(e, (3.0, 0.0)) == pytest.approx(6.0)


def test_grid_program_matches_single_evaluation():
    grid = [
        [parse_expr("cos(x2)^2", 2), parse_expr("x1*x2", 2)],
        [parse_expr("x1*x2", 2), parse_expr("1", 2)],
    ]
    p = (0.4, -0.3)
    values = grid_program(grid).run(p)
    expected = [evaluate(e, p) for row in grid for e in row]
    np.testing.assert_allclose(values, expected, rtol=0, atol=0)


@pytest.mark.parametrize("text", ["x1 +", "foo(x1)", "x1 $ 2", "", "x1^x2"])
def test_malformed_text_is_rejected(text):
    with pytest.raises(ExpressionSyntaxError):
        parse_expr(text, 2)


def test_coordinate_beyond_dimension():
    with pytest.raises(ArityError):
        parse_expr("x3", 2)
    with pytest.raises(ArityError):
        evaluate(parse_expr("x2"), (1.0,))


def test_singularities_raise_domain_error():
    with pytest.raises(DomainError):
        evaluate(parse_expr("log(x1)"), (-1.0,))
    with pytest.raises(DomainError):
        evaluate(parse_expr("1/x1"), (0.0,))


def _library_expressions():
    """Non-constant metric and structure entries of the catalog, with their first derivatives."""
    pool = []
    for entry in list_manifolds():
        m = load_manifold(entry.name)
        grids = [m.metric_upper] + ([m.acs] if m.acs is not None else [])
        entries = {e for grid in grids for row in grid for e in row if e.coords}
        for e in sorted(entries, key=to_text):
            pool.append((m, e))
            pool.extend((m, differentiate(e, l)) for l in sorted(e.coords))
    return pool


def test_library_derivatives_match_central_differences():
    pool = _library_expressions()
    points = {m.name: sample_box(m.domain, 1000, seed=3) for m, _ in pool}
    derivatives = {}
    rng = np.random.default_rng(11)
    for k in range(1000):
        m, e = pool[int(rng.integers(len(pool)))]
        i = int(rng.integers(m.dim))
        p = points[m.name][k]
        if (e, i) not in derivatives:
            derivatives[e, i] = differentiate(e, i)
        exact = evaluate(derivatives[e, i], p, dim=m.dim)
        numeric = central_difference(e, i, p, 1e-5)
        assert abs(exact - numeric) <= 1e-6 * (1 + abs(exact)), (m.name, to_text(e), i, p)


@settings(max_examples=60, deadline=None)
@given(
    first=st.sampled_from(MANIFEST_TEXTS),
    second=st.sampled_from(MANIFEST_TEXTS),
    a=st.floats(-3, 3, allow_nan=False),
    b=st.floats(-3, 3, allow_nan=False),
    i=st.integers(0, 1),
    x1=st.floats(-1, 1, allow_nan=False),
    x2=st.floats(0.2, 1.2, allow_nan=False),
)
def test_differentiation_is_linear(first, second, a, b, i, x1, x2):
    e1, e2 = parse_expr(first, 2), parse_expr(second, 2)
    p = (x1, x2)
    combined = evaluate(differentiate(const(a) * e1 + const(b) * e2, i), p)
    expected = a * evaluate(differentiate(e1, i), p) + b * evaluate(differentiate(e2, i), p)
    assert combined == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_simplify_folds_constant_subtrees():
    folded = simplify(parse_expr("sqrt(2)*x1 + sin(0.3)*x2^2 + exp(0.1)*log(3)", 2))
    assert "sqrt" not in to_text(folded)
    assert "sin" not in to_text(folded)
    assert folded.coords == {0, 1}


def test_simplify_preserves_values_within_four_ulps():
    cases = [
        (parse_expr("sqrt(2)*x1 + sin(0.3)*x2^2 + exp(0.1)*log(3)", 2), ((0.5, 2.0), (0.5, 2.0))),
        (parse_expr("cos(0.2)^2*exp(x1) + x2^2", 2), ((-1.0, 1.0), (-1.0, 1.0))),
    ]
    cases += [(e, m.domain) for m, e in _library_expressions()]
    for e, domain in cases:
        s = simplify(e)
        for p in sample_box(domain, 20, seed=5):
            before, after = evaluate(e, p), evaluate(s, p)
            assert abs(after - before) <= 4 * math.ulp(before), (to_text(e), p)


def test_parser_keeps_the_closed_function_set():
    with pytest.raises(DomainError):
        parse_expr("1/0", 2)
    for text in ("2^x1", "x1^sin(x2)", "E*x1", "x1 % 2", "sin + 1"):
        with pytest.raises(ExpressionSyntaxError):
            parse_expr(text, 2)
    assert parse_expr("x1^0.5", 1) == parse_expr("sqrt(x1)", 1)
    assert evaluate(parse_expr("0.1*x1"), (1.0,)) == 0.1
