import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from wresidue.cosphere import trace_integrate
from wresidue.jets import (ContextError, CurvatureError, JetContext, JetOrderError, complete_riemann,
                           random_context, random_riemann, sphere_riemann, taylor_f, taylor_reciprocal)
from wresidue.symexpr import F, Expr, JetVar, add_all, mul


def test_flat_jets_vanish():
    ctx = JetContext(2, {})
    for mu in ctx.axes:
        for nu in ctx.axes:
            assert ctx.metric_inv_second_jet(mu, nu, 1, 2).is_zero()
            assert ctx.conn_first_jet(mu, nu).is_zero()
    assert ctx.scal().is_zero()


def test_sphere_scalar_curvature():
    ctx = JetContext(2, sphere_riemann(4))
    assert ctx.scal() == Expr.const(12)
    ctx3 = JetContext(3, sphere_riemann(6, Fraction(1, 2)))
    assert ctx3.scal() == Expr.const(15)


@pytest.mark.parametrize("bad, word", [
    ({(1, 2, 3, 4): 1}, "Bianchi"),
    ({(1, 1, 2, 3): 1}, "antisymmetry"),
    ({(1, 2, 1, 2): 1, (2, 1, 2, 1): 2}, "pair symmetry"),
])
def test_curvature_validation(bad, word):
    with pytest.raises(CurvatureError, match=word):
        JetContext(2, bad)


def test_random_riemann_has_all_symmetries():
    full = complete_riemann(random_riemann(6, random.Random(3)), 6)
    for (a, b, c, d), v in full.items():
        assert full.get((b, a, c, d), 0) == -v
        assert full.get((c, d, a, b), 0) == v


def test_context_rejects_zero_f_and_x():
    with pytest.raises(ContextError):
        JetContext(2, None, {(): 0})
    with pytest.raises(ContextError):
        JetContext(2, None, None, {(1, ()): 0})
    with pytest.raises(ContextError):
        JetContext(1)


def test_jet_order_is_bounded():
    with pytest.raises(JetOrderError):
        JetContext(2, None, {(): 1, (1, 2, 3): 1})


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_metric_second_jet_symmetric(seed, mu, nu, al, be):
    ctx = JetContext(2, random_riemann(4, random.Random(seed)))
    j = ctx.metric_inv_second_jet
    assert j(mu, nu, al, be) == j(nu, mu, al, be) == j(mu, nu, be, al)


def test_metric_second_jet_contraction_is_ricci():
    ctx = JetContext(2)
    for al in ctx.axes:
        for be in ctx.axes:
            lhs = add_all(ctx.metric_inv_second_jet(mu, mu, al, be) for mu in ctx.axes)
            # the trace of the second jet is (2/3) Ric under the sectional-curvature convention
            assert lhs == ctx.ric(al, be).scale(Fraction(2, 3))


def test_conn_jet_traceless():
    from wresidue.clifford import trace
    ctx = JetContext(2)
    for a in ctx.axes:
        for b in ctx.axes:
            assert trace(ctx.conn_first_jet(a, b)).is_zero()


def test_laplacian_sign():
    ctx = JetContext(2)
    f = taylor_f(ctx)
    assert ctx.laplacian(f) == -add_all(Expr.var(JetVar(F, (), (j, j))) for j in ctx.axes)
    num = JetContext(2, None, {(): 1, **{(j, j): 1 for j in range(1, 5)}})
    assert num.laplacian(taylor_f(num)) == Expr.const(-4)
    zero = JetContext(2, None, {(): 1})
    assert zero.laplacian(taylor_f(zero)).is_zero()


def test_gradient_square():
    ctx = JetContext(2, None, {(): 2, (1,): 3, (4,): -1})
    assert ctx.grad_sq(taylor_f(ctx)) == Expr.const(10)


@pytest.mark.parametrize("seed", range(3))
def test_ricci_contraction_integrates_to_scalar(seed):
    ctx = random_context(2, seed=seed, f=False, x=False)
    e = add_all(ctx.ric(a, mu) * Expr.xi(a, mu) for a in ctx.axes for mu in ctx.axes) * Expr.xi_norm(-3)
    d = trace_integrate(e, 2)
    assert d.to_expr() == ctx.scal().scale(Fraction(1, 4))


def test_taylor_reciprocal():
    ctx = JetContext(2)
    f = taylor_f(ctx)
    r = taylor_reciprocal(f, 2, ctx)
    prod = mul(f, r, xcap=2)
    assert prod == Expr.const(1)


def test_mode():
    assert JetContext(2).mode == "symbolic"
    assert random_context(2).mode == "numeric"
    assert random_context(2, riem=False).mode == "mixed"


def test_canonical_reduces_norm():
    ctx = JetContext(2)
    x1 = Expr.var(JetVar("X", (1,)), 2)
    rhs = ctx.xnorm() - add_all(Expr.var(JetVar("X", (i,)), 2) for i in range(2, 5))
    assert ctx.canonical(x1) == rhs
