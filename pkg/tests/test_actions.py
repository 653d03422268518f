import random
from fractions import Fraction

import pytest
import sympy

from wresidue.actions import (AGREES, EXACT, MISMATCH, InterpolationResidual, InvalidTriple, Pipeline, TripleSpec,
                              build_d2_symbol, build_triple_symbol, compare_with_paper, decompose,
                              interpolate_coefficients, invariant_basis, pipeline, wres_density)
from wresidue.cosphere import Density
from wresidue.jets import JetContext, random_context, random_riemann
from wresidue.symexpr import F, Expr, JetVar, add_all, at_origin, dX_at_origin


def test_flat_d2_symbol():
    d2 = build_d2_symbol(JetContext(2, {}))
    assert d2.part(2) == Expr.xi_norm(1)
    assert d2.part(1).is_zero() and d2.part(0).is_zero()


def test_d2_symbol_at_base_point():
    ctx = JetContext(2)
    d2 = build_d2_symbol(ctx)
    assert at_origin(d2.part(1)).is_zero()
    assert at_origin(d2.part(0)) == ctx.scal().scale(Fraction(1, 4))
    for a in ctx.axes:
        assert dX_at_origin(d2.part(2), (a,)).is_zero()
    assert not dX_at_origin(d2.part(2), (1, 1)).is_zero()


def test_type1_with_unit_f_is_d2():
    ctx = JetContext(2, None, {(): 1})
    P = pipeline("type1", ctx)
    assert (P.symbol - P.d2).map(ctx.canonical).is_zero()


def test_type1_first_order_cross_term():
    ctx = JetContext(2)
    sym = pipeline("type1", ctx).symbol
    f = Expr.var(JetVar(F))
    expected = add_all(f * Expr.var(JetVar(F, (), (j,))) * Expr.xi(j) for j in ctx.axes) * Expr.imag_unit()
    assert at_origin(sym.part(1)) == expected.scale(-2)


@pytest.mark.parametrize("kind", ["type1", "type2"])
def test_construction_paths_agree(kind):
    ctx = JetContext(2)
    assert build_triple_symbol(TripleSpec(kind, ctx)).paths_agree(ctx)


def test_invalid_triple():
    with pytest.raises(InvalidTriple):
        TripleSpec("type3", JetContext(2))


@pytest.mark.parametrize("m", [2, 3])
def test_kkw(m):
    ctx = JetContext(m)
    d = wres_density(TripleSpec("unperturbed", ctx))
    assert d == Density.from_expr(ctx.scal().scale(Fraction(-(m - 1), 12)), m)


def test_type1_m2_only_curvature_survives():
    ctx = JetContext(2)
    d = wres_density(TripleSpec("type1", ctx))
    coeffs, rest = decompose(d, invariant_basis(ctx, "type1"))
    assert rest.is_zero()
    assert coeffs == {"s": Fraction(-1, 12), "lap_f": 0, "grad_f_sq": 0}
    assert coeffs["s"] * 2 ** 2 == Fraction(-1, 3)


def test_type2_m3_curvature_coefficient():
    ctx = random_context(3, seed=1, x=False)
    d = pipeline("type2", ctx).density
    coeffs, rest = decompose(d, invariant_basis(ctx, "type2"))
    assert rest.is_zero()
    assert coeffs["s"] * 2 ** 3 == Fraction(-4, 3)
    # the gradient coefficient inside the (-1)^m bracket is -(m-1)(m-2)(m-3)/12, zero at m = 3
    assert coeffs == {"s": Fraction(-1, 6), "lap_Ninv": Fraction(-1, 3), "grad_Ninv_sq": 0, "grad_X_sq": 0}


def test_pipeline_deterministic():
    ctx = random_context(2, seed=4)
    a = Pipeline(TripleSpec("type2", ctx)).density
    b = Pipeline(TripleSpec("type2", ctx)).density
    assert a == b and hash(a) == hash(b)


@pytest.mark.parametrize("lam", [Fraction(2), Fraction(-1, 3)])
def test_type1_scaling_covariance(lam):
    m = 3
    base = random_context(m, seed=8, riem=False, x=False)
    scaled = JetContext(m, None, {k: v * lam for k, v in base.f_jets.items()})
    d0 = pipeline("type1", base).density
    d1 = pipeline("type1", scaled).density
    assert d1 == d0.scale(lam ** (-2 * m + 2))


@pytest.mark.parametrize("m", [2, 3])
def test_type2_unit_constant_x_is_pure_curvature(m):
    ctx = JetContext(m, random_riemann(2 * m, random.Random(m)), None, {(1, ()): 1})
    d = pipeline("type2", ctx).density
    assert d.to_expr() == ctx.scal().scale(Fraction((-1) ** m * (m - 1), 12))


@pytest.mark.parametrize("m", [3, 4])
def test_type2_reduces_to_type1_for_a_scalar_multiple_of_a_frame_vector(m):
    # X = phi e_1 on flat space: c(X) D^2 c(X) = -phi D^2 phi up to a constant Clifford conjugation
    base = random_context(m, seed=3)
    ctx1 = JetContext(m, {}, base.f_jets, None)
    ctx2 = JetContext(m, {}, None, {(1, k): v for k, v in base.f_jets.items()})
    d1 = pipeline("type1", ctx1).density
    d2 = pipeline("type2", ctx2).density
    assert not d1.is_zero()
    assert d2 == d1.scale((-1) ** (m - 1))


def test_interpolation():
    m = sympy.Symbol("m")
    values = {k: Fraction(k * k - 3 * k + 2, 3) for k in range(2, 7)}
    poly = interpolate_coefficients(values)
    assert sympy.expand(poly.as_expr() - (m ** 2 - 3 * m + 2) / 3) == 0


def test_interpolation_errors():
    with pytest.raises(InterpolationResidual):
        interpolate_coefficients({2: 1, 3: 2})
    with pytest.raises(InterpolationResidual):
        interpolate_coefficients({k: Fraction(k ** 5) for k in range(2, 8)})


def test_compare_reports():
    ctx = random_context(2, seed=2)
    for t in ("fd2f_symbol", "fd2f_parametrix", "fd2f_power_symbol", "fd2f_density", "kkw_density",
              "fd2f_m2_density", "clifford_traces", "cosphere_integrals"):
        r = compare_with_paper(ctx, t)
        assert r.status == EXACT, t
        assert r.adjudicated and not r.erratum
    r = compare_with_paper(ctx, "cxd2cx_parametrix")
    assert r.status == MISMATCH and r.oracle_status == AGREES and r.erratum
    assert set(r.diff) == {"order -3"}


def test_compare_rejects_unknown_target():
    with pytest.raises(ValueError):
        compare_with_paper(JetContext(2), "theorem")
    with pytest.raises(ValueError):
        compare_with_paper(JetContext(3), "fd2f_m2_density")
