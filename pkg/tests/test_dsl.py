import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from qlm.dsl import (Binary, Call, MetricSource, Num, ParseError, UnboundVariableError, Unary,
                     Var, eval_expr, free_variables, parse, parse_metric,
                     to_source)
from qlm.spacetime import (DomainError, SignatureError, minkowski,
                           schwarzschild_isotropic)

from conftest import random_exterior_points

RHO = "sqrt(y1^2 + y2^2 + y3^2)"
SCHWARZSCHILD = {
    "(0,0)": f"-((1 - M/(2*{RHO}))/(1 + M/(2*{RHO})))^2",
    "(1,1)": f"(1 + M/(2*{RHO}))^4",
    "(2,2)": f"(1 + M/(2*{RHO}))^4",
    "(3,3)": f"(1 + M/(2*{RHO}))^4",
}

# --- flat expression strings checked against Python's own precedence rules

literals = st.sampled_from(["1.5", "2.0", "3.0", "0.5", "x", "y"])
binops = st.sampled_from(["+", "-", "*", "/", "^"])


@st.composite
def operand(draw, depth=0):
    prefix = draw(st.sampled_from(["", "", "-", "- -", "+"]))
    if depth < 2 and draw(st.booleans()):
        core = "(" + draw(flat_expr(depth + 1)) + ")"
    else:
        core = draw(literals)
    return prefix + core


@st.composite
def flat_expr(draw, depth=0):
    n = draw(st.integers(1, 4))
    parts = [draw(operand(depth))]
    for _ in range(n - 1):
        parts += [draw(binops), draw(operand(depth))]
    return " ".join(parts)


def python_value(text, x, y):
    with np.errstate(all="ignore"):
        return eval(text.replace("^", "**"), {"__builtins__": {}},
                    {"x": x, "y": y})


@settings(max_examples=400, deadline=None)
@given(flat_expr(), st.floats(0.25, 3.0), st.floats(0.25, 3.0))
def test_precedence_matches_python(text, x, y):
    try:
        ref = python_value(text, x, y)
    except (ZeroDivisionError, OverflowError):
        assume(False)
    assume(isinstance(ref, float) and math.isfinite(ref) and abs(ref) < 1e12)
    got = eval_expr(parse(text), {"x": x, "y": y})
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(flat_expr())
def test_print_parse_idempotent(text):
    tree = parse(text)
    printed = to_source(tree)
    assert parse(printed) == tree
    assert to_source(parse(printed)) == printed


# --- random trees, printed and re-parsed

names = st.sampled_from(["y0", "y1", "M", "k"])
trees = st.recursive(
    st.one_of(st.floats(0, 10, allow_nan=False).map(Num), names.map(Var)),
    lambda kids: st.one_of(
        st.tuples(st.sampled_from("+-*/^"), kids, kids).map(lambda t: Binary(*t)),
        kids.map(lambda k: Unary("-", k)),
        st.tuples(st.sampled_from(["sin", "exp", "abs", "sqrt"]), kids)
          .map(lambda t: Call(*t)),
    ),
    max_leaves=12,
)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_tree_roundtrip(tree):
    assert parse(to_source(tree)) == tree


def test_examples():
    assert eval_expr(parse("2^3 + y1"), {"y1": 1.0}) == 9.0
    assert eval_expr(parse("asinh(0)"), {}) == 0.0
    assert eval_expr(parse("-2^2"), {}) == -4.0
    assert eval_expr(parse("2^3^2"), {}) == 512.0
    assert eval_expr(parse("2^-1"), {}) == 0.5
    assert eval_expr(parse("1.5e2 * .5"), {}) == 75.0


def test_functions():
    b = {"x": 0.7}
    for name, fn in [("sqrt", math.sqrt), ("sin", math.sin), ("cos", math.cos),
                     ("sinh", math.sinh), ("cosh", math.cosh),
                     ("asinh", math.asinh), ("exp", math.exp),
                     ("log", math.log), ("abs", abs)]:
        assert eval_expr(parse(f"{name}(x)"), b) == pytest.approx(fn(0.7))


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_expr(parse("sqrt(-1)"), {})
    with pytest.raises(DomainError):
        eval_expr(parse("log(0)"), {})
    with pytest.raises(DomainError):
        eval_expr(parse("1/(x-x)"), {"x": 2.0})


def test_unbound_variable():
    with pytest.raises(UnboundVariableError, match="'z'"):
        eval_expr(parse("z + 1"), {})


def test_syntax_error_position():
    with pytest.raises(ParseError) as err:
        parse("-1 +")
    assert err.value.pos == 4
    assert (err.value.line, err.value.column) == (1, 5)


@pytest.mark.parametrize("text, pos", [("2 * (3 + 4", 10), ("sin 2", 4),
                                       ("3 $ 4", 2), ("1 2", 2),
                                       ("foo(1)", 0)])
def test_syntax_error_positions(text, pos):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert err.value.pos == pos


def test_multiline_position():
    with pytest.raises(ParseError) as err:
        parse("1 +\n  * 2")
    assert (err.value.line, err.value.column) == (2, 3)


def test_vectorized_evaluation():
    x = np.linspace(1, 2, 5)
    np.testing.assert_allclose(eval_expr(parse("x^2 - 1"), {"x": x}), x ** 2 - 1)


def test_free_variables():
    assert free_variables(parse("M*sin(y1) + y2^k")) == {"M", "y1", "y2", "k"}


def test_minkowski_from_dsl(rng):
    m = parse_metric({"(0,0)": "-1", "(1,1)": "1", "(2,2)": "1", "(3,3)": "1"})
    pts = rng.normal(size=(50, 4))
    assert np.array_equal(m.eval(pts), minkowski().eval(pts))
    assert np.max(np.abs(m.deriv(pts))) == 0.0


def test_schwarzschild_roundtrip_against_builtin(rng):
    m = parse_metric(MetricSource.from_mapping(SCHWARZSCHILD, {"M": 1.0}))
    ref = schwarzschild_isotropic(1.0)
    pts = random_exterior_points(rng, 100)
    G, G_ref = m.eval(pts), ref.eval(pts)
    assert np.max(np.abs(G - G_ref) / np.abs(G_ref).max(axis=(1, 2))[:, None, None]) < 1e-12
    far = random_exterior_points(rng, 20, rmin=5.0)
    dG, dG_ref = m.deriv(far), ref.deriv(far)
    assert np.max(np.abs(dG - dG_ref)) < 1e-6 * np.max(np.abs(dG_ref))


def test_key_spellings_and_unlisted_zero():
    m = parse_metric({"g00": "-1", "1,1": "1", "22": "1", (3, 3): "1",
                      "(1,0)": "0.1"})
    G = m.eval(np.zeros(4))
    assert G[0, 1] == G[1, 0] == 0.1
    assert G[0, 2] == 0.0


def test_unknown_identifier_is_reported():
    with pytest.raises(ParseError, match="unknown identifier 'Q'") as err:
        parse_metric({"(0,0)": "-1 + Q", "(1,1)": "1", "(2,2)": "1",
                      "(3,3)": "1"})
    assert err.value.pos == 5


def test_non_lorentzian_is_deferred_to_first_use():
    m = parse_metric({"(0,0)": "1", "(1,1)": "1", "(2,2)": "1", "(3,3)": "1"})
    with pytest.raises(SignatureError):
        m.eval(np.zeros(4))


def test_duplicate_and_bad_keys():
    with pytest.raises(ValueError, match="duplicate"):
        parse_metric({"(0,1)": "0", "(1,0)": "0"})
    with pytest.raises(ValueError):
        parse_metric({"(0,4)": "1"})
