from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from wresidue.jets import JetContext
from wresidue.symexpr import (F, SCAL, X, Expr, JetVar, NonScalarClifford, UnboundVariable, add_all, dX,
                              dX_at_origin, dXi, evaluate, mul, substitute)

f = Expr.var(JetVar(F))
s = Expr.var(JetVar(SCAL))
JETS = [JetVar(F), JetVar(F, (), (1,)), JetVar(F, (), (1, 2)), JetVar(SCAL), JetVar(X, (1,)), JetVar(X, (2,), (1,))]


@st.composite
def terms(draw, clifford=True, imag=True):
    c = Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4)))
    e = Expr.const(c)
    for v in draw(st.lists(st.sampled_from(JETS), max_size=2)):
        e = e * Expr.var(v, draw(st.integers(1, 2)))
    e = e * Expr.xi(*draw(st.lists(st.integers(1, 4), max_size=2)))
    e = e * Expr.xi_norm(draw(st.integers(-2, 1)))
    e = e * Expr.x(*draw(st.lists(st.integers(1, 4), max_size=2)))
    if clifford:
        e = e * Expr.word(tuple(sorted(set(draw(st.lists(st.integers(1, 4), max_size=2))))))
    if imag and draw(st.booleans()):
        e = e * Expr.imag_unit()
    return e


def exprs(**kw):
    return st.lists(terms(**kw), max_size=3).map(add_all)


VALUES = {v: Fraction(k + 2, 3) for k, v in enumerate(JETS)}
XI = {1: Fraction(1, 2), 2: Fraction(-2, 3), 3: Fraction(3), 4: Fraction(1, 5)}
XS = {1: Fraction(2), 2: Fraction(-1, 2), 3: Fraction(1, 3), 4: Fraction(5, 7)}


# -- examples ---------------------------------------------------------------

def test_like_terms_merge():
    a = f * Expr.xi_norm(1)
    assert a + a == (f * Expr.xi_norm(1)).scale(2)


def test_cancellation_gives_empty():
    assert (f - f).is_zero()
    assert len(f - f) == 0


def test_distinct_keys_stay_apart():
    assert len(s + Expr.xi(1, 2)) == 2


def test_exponents_add():
    a = f * Expr.xi_norm(-1)
    assert a * a == Expr.var(JetVar(F), 2) * Expr.xi_norm(-2)


def test_clifford_square_is_minus_one():
    assert Expr.word((1,)) * Expr.word((1,)) == Expr.const(-1)


def test_difference_of_squares():
    a = Expr.xi(1) + Expr.xi(2)
    b = Expr.xi(1) - Expr.xi(2)
    assert a * b == Expr.xi(1, 1) - Expr.xi(2, 2)


def test_imaginary_unit_squares_to_minus_one():
    i = Expr.imag_unit()
    assert i * i == Expr.const(-1)


def test_dx_of_field_shifts_jet():
    assert dX(f, 1, fields=True) == Expr.var(JetVar(F, (), (1,)))


def test_dx_treats_jets_as_constants_by_default():
    assert dX(f, 1).is_zero()
    assert dX(f * Expr.x(1, 1), 1) == (f * Expr.x(1)).scale(2)


def test_partials_commute_on_jets():
    a = dX(dX(f, 1, fields=True), 2, fields=True)
    b = dX(dX(f, 2, fields=True), 1, fields=True)
    assert a == b == Expr.var(JetVar(F, (), (1, 2)))


def test_metric_norm_derivative():
    # d_mu |xi|_g^{-2} = -|xi|^{-4} xi_a xi_b d_mu g^{ab}: zero at x0, curvature one order later
    ctx = JetContext(2)
    e = ctx.xi_norm_pow(-1)
    assert dX_at_origin(e, (1,)).is_zero()
    lhs = dX_at_origin(e, (1, 2))
    rhs = -add_all(Expr.xi_norm(-2) * Expr.xi(a, b) * ctx.metric_inv_second_jet(1, 2, a, b)
                   for a in ctx.axes for b in ctx.axes)
    assert ctx.canonical(lhs - rhs).is_zero()


def test_dxi_of_norm():
    assert dXi(Expr.xi_norm(1), 3) == Expr.xi(3).scale(2)
    assert dXi(Expr.xi_norm(-1), 3) == (Expr.xi_norm(-2) * Expr.xi(3)).scale(-2)


def test_dxi_of_monomial():
    assert dXi(Expr.xi(1, 2), 1) == Expr.xi(2)


def test_second_xi_derivative_of_norm_is_metric():
    for mu in range(1, 5):
        for nu in range(1, 5):
            assert dXi(dXi(Expr.xi_norm(1), mu), nu) == Expr.const(2 * (mu == nu))


def test_evaluate_arithmetic():
    e = Expr.var(JetVar(F), 2) * Expr.xi_norm(-1)
    assert evaluate(e, {JetVar(F): 3}, xi_norm2=4) == Fraction(9, 4)


def test_evaluate_unbound():
    with pytest.raises(UnboundVariable):
        evaluate(f * s, {JetVar(F): 1})


def test_evaluate_rejects_clifford():
    with pytest.raises(NonScalarClifford):
        evaluate(Expr.word((1, 2)), {})


def test_substitute_negative_power():
    e = Expr.var(JetVar(F), -2) * s
    assert substitute(e, {JetVar(F): 2}) == s.scale(Fraction(1, 4))


# -- properties ---------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(exprs(), exprs(), exprs())
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a + b) * c == a * c + b * c


@settings(max_examples=60, deadline=None)
@given(exprs(clifford=False), exprs(clifford=False))
def test_commutative_without_clifford(a, b):
    assert a * b == b * a


@settings(max_examples=60, deadline=None)
@given(exprs(), exprs(), st.integers(1, 4), st.booleans())
def test_dx_leibniz(a, b, k, fields):
    assert dX(a * b, k, fields=fields) == dX(a, k, fields=fields) * b + a * dX(b, k, fields=fields)


@settings(max_examples=60, deadline=None)
@given(exprs(), exprs(), st.integers(1, 4))
def test_dxi_leibniz(a, b, mu):
    assert dXi(a * b, mu) == dXi(a, mu) * b + a * dXi(b, mu)


@settings(max_examples=60, deadline=None)
@given(exprs(), st.integers(1, 4), st.integers(1, 4), st.booleans())
def test_dx_dxi_commute(e, k, mu, fields):
    assert dX(dXi(e, mu), k, fields=fields) == dXi(dX(e, k, fields=fields), mu)


@settings(max_examples=60, deadline=None)
@given(exprs(), st.integers(0, 3))
def test_xcap_truncates_consistently(e, cap):
    full = dX(e * e, 1)
    capped = dX(mul(e, e), 1, xcap=cap)
    assert capped == add_all(Expr({k: c}) for k, c in full.items() if len(k[3]) <= cap)


@settings(max_examples=60, deadline=None)
@given(exprs(clifford=False), exprs(clifford=False))
def test_evaluate_is_homomorphism(a, b):
    def ev(e):
        return evaluate(e, VALUES, xi=XI, x=XS)

    assert ev(a + b) == _gadd(ev(a), ev(b))
    assert ev(a * b) == _gmul(ev(a), ev(b))


def _split(v):
    return (v.re, v.im) if hasattr(v, "re") else (Fraction(v), Fraction(0))


def _join(re, im):
    from wresidue.symexpr import Gaussian
    return re if im == 0 else Gaussian(re, im)


def _gadd(u, v):
    (a, b), (c, d) = _split(u), _split(v)
    return _join(a + c, b + d)


def _gmul(u, v):
    (a, b), (c, d) = _split(u), _split(v)
    return _join(a * c - b * d, a * d + b * c)


@settings(max_examples=40, deadline=None)
@given(exprs(clifford=False, imag=False))
def test_canonical_idempotent(e):
    ctx = JetContext(2)
    e = e * Expr.xi(1, 1) * Expr.var(JetVar(X, (1,)), 3)
    once = ctx.canonical(e)
    assert ctx.canonical(once) == once
