from fractions import Fraction
from math import pi

import pytest
from hypothesis import given, settings, strategies as st

from wresidue import targets
from wresidue.cosphere import (Density, ImaginaryResidue, NonHomogeneous, mc_moment_oracle, sphere_moment,
                               sphere_volume, trace_integrate)
from wresidue.jets import JetContext
from wresidue.symexpr import F, SCAL, Expr, JetVar, add_all


@pytest.mark.parametrize("m", [2, 3, 4])
def test_second_moment(m):
    n = 2 * m
    assert sphere_moment((1, 1), n) == Fraction(1, n)
    assert sphere_moment((1, 2), n) == 0


def test_odd_moment_vanishes():
    assert sphere_moment((1, 2, 3), 4) == 0


def test_fourth_moments():
    assert sphere_moment((1, 1, 2, 2), 4) == Fraction(1, 24)
    assert sphere_moment((1, 1, 1, 1), 4) == Fraction(3, 24)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 6), max_size=6), st.randoms())
def test_moment_symmetric(idx, rnd):
    shuffled = list(idx)
    rnd.shuffle(shuffled)
    assert sphere_moment(idx, 6) == sphere_moment(shuffled, 6)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_moments_sum_to_one(n):
    assert sum(sphere_moment((j, j), n) for j in range(1, n + 1)) == 1
    assert sum(sphere_moment((i, i, j, j), n) for i in range(1, n + 1) for j in range(1, n + 1)) == 1


@pytest.mark.parametrize("idx, n", [((1, 2), 6), ((1, 1), 6), ((1, 1, 2, 2), 6), ((1, 1, 1, 1), 4)])
def test_monte_carlo_oracle(idx, n):
    est, err = mc_moment_oracle(idx, n, samples=200_000, seed=5)
    assert abs(est - float(sphere_moment(idx, n))) < 3 * err + 1e-12


def test_monte_carlo_reproducible():
    assert mc_moment_oracle((1, 1), 4, samples=10**4, seed=2) == mc_moment_oracle((1, 1), 4, samples=10**4, seed=2)
    with pytest.raises(ValueError):
        mc_moment_oracle((1, 1), 4, samples=100)


def test_sphere_volume():
    assert sphere_volume(4) == pytest.approx(2 * pi ** 2)


def test_constant_on_sphere():
    s = Expr.var(JetVar(SCAL))
    assert trace_integrate(s * Expr.xi_norm(-2), 2) == Density(2, {((JetVar(SCAL), 1),): 1})


def test_ricci_term_integrates_to_scalar_over_2m():
    for m in (2, 3):
        ctx = JetContext(m)
        f = Expr.var(JetVar(F), -2 * m + 2)
        e = f * Expr.xi_norm(-m - 1) * add_all(ctx.ric(a, mu) * Expr.xi(mu, a) for a in ctx.axes for mu in ctx.axes)
        assert trace_integrate(e, m) == Density.from_expr((f * ctx.scal()).scale(Fraction(1, 2 * m)), m)


def test_clifford_words_trace_out():
    e = Expr.word((1, 2)) * Expr.xi_norm(-2) + Expr.xi_norm(-2)
    assert trace_integrate(e, 2) == Density(2, {(): 1})


def test_errors():
    with pytest.raises(NonHomogeneous):
        trace_integrate(Expr.xi_norm(-1), 2)
    with pytest.raises(ImaginaryResidue):
        trace_integrate(Expr.imag_unit() * Expr.xi_norm(-2), 2)
    with pytest.raises(NonHomogeneous):
        trace_integrate(Expr.x(1) * Expr.xi_norm(-2), 2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(-4, 4), st.lists(st.integers(1, 4), max_size=4)), max_size=4),
       st.lists(st.tuples(st.integers(-4, 4), st.lists(st.integers(1, 4), max_size=4)), max_size=4))
def test_trace_integrate_linear(ta, tb):
    def build(ts):
        out = Expr()
        for c, xi in ts:
            k = len(xi)
            if k % 2:
                xi = xi[:-1]
                k -= 1
            out = out + Expr.xi(*xi) * Expr.xi_norm(-2 - k // 2) * Expr.const(c)
        return out

    a, b = build(ta), build(tb)
    assert trace_integrate(a + b, 2) == trace_integrate(a, 2) + trace_integrate(b, 2)


@pytest.mark.parametrize("m", [2, 3])
def test_integral_identities(m):
    rows = targets.cosphere_identities(JetContext(m))
    assert len(rows) == 10
    for name, lhs, rhs in rows:
        assert lhs == rhs, name


def test_density_arithmetic():
    s = JetVar(SCAL)
    d = Density(2, {((s, 1),): Fraction(1, 3)})
    assert (d - d).is_zero()
    assert d.scale(3).coefficient(((s, 1),)) == 1
    assert d.items() == [("s", Fraction(1, 3))]
    with pytest.raises(ValueError):
        d + Density(3, {})
