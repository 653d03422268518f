"""Closed-form expressions from the literature, transcribed term by term.

Nothing here is trusted: every function produces a comparison target for the
engine in :mod:`wresidue.actions`.  Field-level quantities at x0 are written
with symbolic jets, differentiated by the chain rule, and only then bound to
the numeric values of the context (if any).
"""
from __future__ import annotations

from fractions import Fraction

from .clifford import drop_trace_marker, trace
from .cosphere import Density, trace_integrate
from .jets import JetContext, taylor_f, taylor_reciprocal, xnorm_taylor, taylor_cx
from .psdo import GradedSymbol
from .symexpr import (F, X, Expr, JetVar, add_all, dX, dX_multi, mul, xnorm_var)

I = Expr.imag_unit()


class Fields:
    """Symbolic jets of f and X at x0 with derivatives by the chain rule."""

    def __init__(self, ctx: JetContext):
        self.ctx = ctx
        self.axes = ctx.axes

    def f(self, p: int = 1) -> Expr:
        return Expr.var(JetVar(F), p)

    def fd(self, *a: int) -> Expr:
        return Expr.var(JetVar(F, (), tuple(sorted(a))))

    def N(self, p: int = 1) -> Expr:
        return Expr.var(xnorm_var(self.ctx.n), p)

    def dNinv(self, *a: int) -> Expr:
        return dX_multi(self.N(-1), a, fields=True)

    def c(self, *a: int) -> Expr:
        return add_all(Expr.var(JetVar(X, (i,), tuple(sorted(a)))) * Expr.word((i,)) for i in self.axes)

    def lap_f(self) -> Expr:
        return -add_all(self.fd(j, j) for j in self.axes)

    def grad_f_sq(self) -> Expr:
        return add_all(self.fd(j) * self.fd(j) for j in self.axes)

    def lap_Ninv(self) -> Expr:
        return -add_all(self.dNinv(j, j) for j in self.axes)

    def grad_Ninv_sq(self) -> Expr:
        return add_all(self.dNinv(j) * self.dNinv(j) for j in self.axes)

    def grad_x_sq(self) -> Expr:
        return add_all(Expr.var(JetVar(X, (i,), (j,)), 2) for i in self.axes for j in self.axes)

    def ric_xi(self) -> Expr:
        """``sum_{a,mu} R_{alpha a alpha mu} xi_mu xi_a``."""
        ctx = self.ctx
        return add_all(ctx.ric(a, mu) * Expr.xi(a, mu) for a in self.axes for mu in self.axes)

    def bind(self, e: Expr) -> Expr:
        return self.ctx.canonical(self.ctx.at_x0(e))


def _xi(p: int) -> Expr:
    """Flat ``|xi|^(2p)``; at x0 the metric is the identity."""
    return Expr.xi_norm(p)


# ---------------------------------------------------------------------------
# symbols of the perturbed operators

def fd2f_symbol(ctx: JetContext, d2: GradedSymbol) -> GradedSymbol:
    """Three symbol orders of f D^2 f (with the contracted sigma^mu sigma_mu)."""
    f = taylor_f(ctx)
    f2 = mul(f, f, xcap=2)
    df = {j: dX(f, j) for j in ctx.axes}
    s2 = mul(f2, d2.part(2), xcap=2)
    s1 = mul(f2, d2.part(1), xcap=1) - add_all(
        mul(mul(f, df[j], xcap=1), ctx.raised_xi(j), xcap=1) for j in ctx.axes).scale(2) * I
    s0 = mul(f2, d2.part(0), xcap=0)
    for j in ctx.axes:
        s0 = s0 + mul(mul(f, df[j], xcap=0),
                      ctx.christoffel_contracted(j) - ctx.spin_connection_up(j).scale(2), xcap=0)
        for l in ctx.axes:
            s0 = s0 - mul(mul(f, dX(df[j], l), xcap=0), ctx.metric_inv(j, l), xcap=0)
    return GradedSymbol({2: s2, 1: s1, 0: s0}, 0, ctx.n)


def cxd2cx_symbol(ctx: JetContext, d2: GradedSymbol) -> GradedSymbol:
    """Three symbol orders of c(X) D^2 c(X) in the printed form, where |X|^2 stands beside sigma."""
    axes = ctx.axes
    N = xnorm_taylor(ctx)
    c = taylor_cx(ctx)
    dc = {i: dX(c, i) for i in axes}
    sig = {i: ctx.spin_connection_up(i) for i in axes}
    gam = {k: ctx.christoffel_contracted(k) for k in axes}
    s2 = -mul(N, ctx.xi_norm_sq(), xcap=2)
    s1 = [-mul(N, mul(gam[mu] - sig[mu].scale(2), Expr.xi(mu), xcap=1), xcap=1) for mu in axes]
    for i in axes:
        for j in axes:
            s1.append(mul(ctx.metric_inv(i, j), mul(c, dc[i], xcap=1) * Expr.xi(j), xcap=1).scale(-2))
    s1 = add_all(s1) * I
    inner = []
    for i in axes:
        for j in axes:
            inner.append(mul(ctx.metric_inv(i, j), dX(ctx.spin_connection(j), i), xcap=0))
    for j in axes:
        inner.append(mul(sig[j], ctx.spin_connection(j), xcap=0))
        inner.append(-mul(gam[j], ctx.spin_connection(j), xcap=0))
    s0 = [mul(N, add_all(inner), xcap=0), -mul(N, ctx.scal(), xcap=0).scale(Fraction(1, 4))]
    for i in axes:
        for j in axes:
            s0.append(-mul(ctx.metric_inv(i, j), mul(c, dX(dc[j], i), xcap=0), xcap=0))
        s0.append(-mul(mul(c, sig[i], xcap=0), dc[i], xcap=0).scale(2))
        s0.append(mul(mul(c, gam[i], xcap=0), dc[i], xcap=0))
    out = GradedSymbol({2: s2, 1: s1, 0: add_all(s0)}, 0, ctx.n)
    return out.map(lambda e: ctx.canonical(e, xi=False))


# ---------------------------------------------------------------------------
# parametrix parts: b_-2 to x-degree 2, b_-3 to x-degree 1, b_-4 at x0

def _raised_dot(ctx, vec: dict, cap: int) -> Expr:
    """``sum_j v_j xi^j``."""
    return add_all(mul(vec[j], ctx.raised_xi(j), xcap=cap) for j in ctx.axes)


def _dg_term(ctx) -> Expr:
    """``xi^mu xi_alpha xi_beta d_mu g^{alpha beta}`` to x-degree 1."""
    h = ctx.xi_norm_correction
    return add_all(mul(ctx.raised_xi(mu), dX(h, mu), xcap=1) for mu in ctx.axes)


def fd2f_parametrix(ctx: JetContext) -> dict:
    fl = Fields(ctx)
    axes = ctx.axes
    f = taylor_f(ctx)
    r = taylor_reciprocal(f, 2, ctx)
    r2 = mul(r, r, xcap=2)
    r3 = mul(r2, r, xcap=2)
    b2 = mul(r2, ctx.xi_norm_pow(-1), xcap=2)
    conn = add_all(mul(ctx.christoffel_contracted(mu) - ctx.spin_connection_up(mu).scale(2), Expr.xi(mu), xcap=1)
                   for mu in axes)
    b3 = (-mul(mul(r2, ctx.xi_norm_pow(-2), xcap=1), conn, xcap=1)
          - mul(mul(r3, ctx.xi_norm_pow(-2), xcap=1), _raised_dot(ctx, {j: dX(f, j) for j in axes}, 1),
                xcap=1).scale(2)
          - mul(mul(r2, ctx.xi_norm_pow(-3), xcap=1), _dg_term(ctx), xcap=1).scale(2)) * I
    fj2 = add_all(fl.fd(j, j) for j in axes)
    b4 = (-(fl.f(-2) * _xi(-2) * ctx.scal()).scale(Fraction(1, 4))
          - fl.f(-3) * _xi(-2) * fj2
          + (fl.f(-4) * _xi(-2) * fl.grad_f_sq()).scale(2)
          + (fl.f(-2) * _xi(-3) * fl.ric_xi()).scale(Fraction(2, 3))
          - (fl.f(-4) * _xi(-3) * add_all(fl.fd(j) * fl.fd(a) * Expr.xi(j, a) for j in axes for a in axes)).scale(8)
          + (fl.f(-3) * _xi(-3) * add_all(fl.fd(a, j) * Expr.xi(j, a) for j in axes for a in axes)).scale(4))
    return {-2: b2, -3: b3, -4: fl.bind(b4)}


def cxd2cx_parametrix(ctx: JetContext) -> dict:
    fl = Fields(ctx)
    axes = ctx.axes
    N = xnorm_taylor(ctx)
    r = taylor_reciprocal(N, 2, ctx)
    r2 = mul(r, r, xcap=2)
    c = taylor_cx(ctx)
    b2 = -mul(r, ctx.xi_norm_pow(-1), xcap=2)
    conn = add_all(mul(ctx.christoffel_contracted(k) - ctx.spin_connection_up(k).scale(2), Expr.xi(k), xcap=1)
                   for k in axes)
    cdc = add_all(mul(mul(c, dX(c, k), xcap=1), ctx.raised_xi(k), xcap=1) for k in axes)
    b3 = (mul(mul(r, ctx.xi_norm_pow(-2), xcap=1), conn, xcap=1)
          - mul(ctx.xi_norm_pow(-2), _raised_dot(ctx, {j: dX(r, j) for j in axes}, 1), xcap=1).scale(2)
          + mul(mul(r, ctx.xi_norm_pow(-3), xcap=1), _dg_term(ctx), xcap=1).scale(2)
          + mul(mul(r2, ctx.xi_norm_pow(-2), xcap=1), cdc, xcap=1).scale(2)) * I
    cx, N_, dN = fl.c, fl.N, fl.dNinv
    terms = [
        (N_(-1) * _xi(-2) * ctx.scal()).scale(Fraction(1, 4)),
        -(N_(-1) * _xi(-3) * fl.ric_xi()).scale(Fraction(2, 3)),
        (_xi(-3) * add_all(dN(a, mu) * Expr.xi(a, mu) for a in axes for mu in axes)).scale(4),
        -(_xi(-2) * add_all(dN(a, a) for a in axes)),
        (N_(-3) * _xi(-3) * add_all(cx() * cx(a) * cx() * cx(j) * Expr.xi(a, j) for a in axes for j in axes)).scale(4),
        -(N_(-2) * _xi(-3) * add_all(cx(a) * cx(j) * Expr.xi(a, j) for a in axes for j in axes)).scale(4),
        (N_(-1) * _xi(-2) * add_all(dN(j) * cx() * cx(j) for j in axes)).scale(2),
        N_(-2) * _xi(-2) * add_all(cx() * cx(j, j) for j in axes),
        -(N_(-1) * _xi(-3) * add_all(dN(j) * cx() * cx(a) * Expr.xi(a, j) for a in axes for j in axes)).scale(12),
        -(N_(-2) * _xi(-3) * add_all(cx() * cx(a, j) * Expr.xi(a, j) for a in axes for j in axes)).scale(4),
    ]
    return {-2: ctx.canonical(b2, xi=False), -3: ctx.canonical(b3, xi=False), -4: fl.bind(add_all(terms))}


# ---------------------------------------------------------------------------
# order -2m symbols of the powers at x0

def fd2f_power_symbol(ctx: JetContext) -> Expr:
    m = ctx.m
    fl = Fields(ctx)
    axes = ctx.axes
    f, fd = fl.f, fl.fd
    terms = [
        -(f(-2 * m + 2) * _xi(-m) * ctx.scal()).scale(Fraction(m - 1, 4)),
        -(f(-2 * m + 1) * _xi(-m) * add_all(fd(j, j) for j in axes)).scale((m - 1) ** 2),
        (f(-2 * m + 2) * _xi(-m - 1) * fl.ric_xi()).scale(Fraction(m * (m - 1), 3)),
        (f(-2 * m) * _xi(-m) * fl.grad_f_sq()).scale(Fraction(m * (4 * m * m - 9 * m + 5), 3)),
        (f(-2 * m + 1) * _xi(-m - 1) * add_all(fd(j, l) * Expr.xi(j, l) for j in axes for l in axes))
        .scale(Fraction(2 * m * (2 * m * m - 3 * m + 1), 3)),
        -(f(-2 * m) * _xi(-m - 1) * add_all(fd(a) * fd(b) * Expr.xi(a, b) for a in axes for b in axes))
        .scale(2 * m * m * (m - 1) ** 2),
    ]
    return fl.bind(add_all(terms))


def cxd2cx_power_symbol(ctx: JetContext) -> Expr:
    m = ctx.m
    fl = Fields(ctx)
    axes = ctx.axes
    N, dN, c = fl.N, fl.dNinv, fl.c

    def xx(fn):
        return add_all(fn(a, j) * Expr.xi(a, j) for a in axes for j in axes)

    terms = [
        (N(-m + 1) * _xi(-m) * ctx.scal()).scale(Fraction(m - 1, 4)),
        -(N(-m + 1) * _xi(-m - 1) * fl.ric_xi()).scale(Fraction(m * m - m, 3)),
        -(N(-m + 2) * _xi(-m) * add_all(dN(a, a) for a in axes)).scale(Fraction(m * m - m, 2)),
        (N(-m + 2) * _xi(-m - 1) * xx(lambda a, j: dN(j, a))).scale(Fraction(2 * m * (m * m - 1), 3)),
        (N(-m + 3) * _xi(-m - 1) * xx(lambda a, j: dN(a) * dN(j)))
        .scale(Fraction(m * (m ** 3 - 2 * m * m - m + 2), 2)),
        -(N(-m + 3) * _xi(-m) * fl.grad_Ninv_sq()).scale(Fraction(m * (m * m - 3 * m + 2), 3)),
        -(N(-m) * _xi(-m - 1) * xx(lambda a, j: c(a) * c(j))).scale(2 * m * (m - 1)),
        -(N(-m + 1) * _xi(-m - 1) * xx(lambda a, j: dN(j) * c() * c(a))).scale(2 * (m ** 3 - 2 * m * m + 5 * m - 4)),
        (N(-m) * _xi(-m) * add_all(c() * c(j, j) for j in axes)).scale(m - 1),
        (N(-m + 1) * _xi(-m) * add_all(dN(j) * c() * c(j) for j in axes)).scale(m * (m - 1)),
        -(N(-m) * _xi(-m - 1) * xx(lambda a, j: c() * c(a, j))).scale(2 * m * (m - 1)),
        (N(-m - 1) * _xi(-m - 1) * xx(lambda a, j: c() * c(j) * c() * c(a))).scale(2 * m * (m - 1)),
    ]
    return fl.bind(add_all(terms).scale((-1) ** m))


# ---------------------------------------------------------------------------
# trace and cosphere identities

def clifford_trace_identities(ctx: JetContext) -> list[tuple[str, Expr, Expr]]:
    """Four trace identities (summed over j), as ``(name, lhs, rhs)`` at x0."""
    fl = Fields(ctx)
    axes = ctx.axes
    c, N, dN = fl.c, fl.N, fl.dNinv

    def tr(e):
        return drop_trace_marker(trace(e))

    out = [
        ("tr[dc dc]", tr(add_all(c(j) * c(j) for j in axes)), -fl.grad_x_sq()),
        ("tr[c dc]", tr(add_all(c() * c(j) for j in axes)), (N(2) * add_all(dN(j) for j in axes)).scale(Fraction(1, 2))),
        ("tr[c ddc]", tr(add_all(c() * c(j, j) for j in axes)),
         (N(2) * add_all(dN(j, j) for j in axes)).scale(Fraction(1, 2)) - N(3) * fl.grad_Ninv_sq() + fl.grad_x_sq()),
        ("tr[c dc c dc]", tr(add_all(c() * c(j) * c() * c(j) for j in axes)),
         (N(4) * fl.grad_Ninv_sq()).scale(Fraction(1, 2)) - N() * fl.grad_x_sq()),
    ]
    return [(name, fl.bind(lhs), fl.bind(rhs)) for name, lhs, rhs in out]


def cosphere_identities(ctx: JetContext) -> list[tuple[str, Density, Density]]:
    """Integrated trace identities for both perturbations, as ``(name, lhs, rhs)`` densities."""
    m = ctx.m
    fl = Fields(ctx)
    axes = ctx.axes
    f, fd, c, N, dN = fl.f, fl.fd, fl.c, fl.N, fl.dNinv
    s = ctx.scal()
    k = Fraction(1, 2 * m)

    def xx(fn):
        return add_all(fn(a, j) * Expr.xi(a, j) for a in axes for j in axes)

    rows = [
        ("f s", f(-2 * m + 2) * _xi(-m) * s, f(-2 * m + 2) * s),
        ("f Ric xi xi", f(-2 * m + 2) * _xi(-m - 1) * fl.ric_xi(), (f(-2 * m + 2) * s).scale(k)),
        ("f ddf", f(-2 * m + 1) * _xi(-m) * add_all(fd(j, j) for j in axes), -f(-2 * m + 1) * fl.lap_f()),
        ("f df df", f(-2 * m) * _xi(-m) * fl.grad_f_sq(), f(-2 * m) * fl.grad_f_sq()),
        ("f ddf xi xi", f(-2 * m + 1) * _xi(-m - 1) * xx(lambda a, j: fd(a, j)),
         -(f(-2 * m + 1) * fl.lap_f()).scale(k)),
        ("f df df xi xi", f(-2 * m) * _xi(-m - 1) * xx(lambda a, j: fd(a) * fd(j)),
         (f(-2 * m) * fl.grad_f_sq()).scale(k)),
    ]
    rows += [
        ("dc dc xi xi", _xi(-m - 1) * xx(lambda a, j: c(a) * c(j)), -fl.grad_x_sq().scale(k)),
        ("dN c dc", _xi(-m) * add_all(dN(j) * c() * c(j) for j in axes),
         (N(2) * fl.grad_Ninv_sq()).scale(Fraction(1, 2))),
        ("c ddc", _xi(-m) * add_all(c() * c(j, j) for j in axes),
         fl.grad_x_sq() - N(3) * fl.grad_Ninv_sq() - (N(2) * fl.lap_Ninv()).scale(Fraction(1, 2))),
        ("c dc c dc xi xi", _xi(-m - 1) * xx(lambda a, j: c() * c(j) * c() * c(a)),
         (N(4) * fl.grad_Ninv_sq() - (N() * fl.grad_x_sq()).scale(2)).scale(Fraction(1, 4 * m))),
    ]
    out = []
    for name, lhs, rhs in rows:
        out.append((name, Density.from_expr(fl.bind(trace_integrate(fl.bind(lhs), m).to_expr()), m),
                    Density.from_expr(fl.bind(rhs), m)))
    return out


# ---------------------------------------------------------------------------
# densities (coefficients of 2^m Vol(S^{n-1}))

def fd2f_density(ctx: JetContext) -> Density:
    m = ctx.m
    fl = Fields(ctx)
    e = (-(fl.f(-2 * m + 2) * ctx.scal()).scale(Fraction(m - 1, 12))
         + (fl.f(-2 * m + 1) * fl.lap_f()).scale(Fraction(m * m - 3 * m + 2, 3))
         + (fl.f(-2 * m) * fl.grad_f_sq()).scale(Fraction(m * (m * m - 3 * m + 2), 3)))
    return Density.from_expr(fl.bind(e), m)


def cxd2cx_density(ctx: JetContext) -> Density:
    m = ctx.m
    fl = Fields(ctx)
    e = ((fl.N(-m + 1) * ctx.scal()).scale(Fraction(m - 1, 12))
         + (fl.N(-m + 2) * fl.lap_Ninv()).scale(Fraction(m * m - 3 * m + 2, 6))
         + (fl.N(-m + 3) * fl.grad_Ninv_sq()).scale(Fraction(6 * m ** 3 - m ** 4 + m * m - 30 * m + 24, 12 * m)))
    return Density.from_expr(fl.bind(e.scale((-1) ** m)), m)


def kkw_density(ctx: JetContext) -> Density:
    return Density.from_expr(ctx.canonical(ctx.scal().scale(Fraction(-(ctx.m - 1), 12))), ctx.m)


def fd2f_m2_density(ctx: JetContext) -> Density:
    """At m = 2 only the curvature term survives, with total weight -1/3 once 2^2 is included."""
    fl = Fields(ctx)
    return Density.from_expr(fl.bind((fl.f(-2) * ctx.scal()).scale(Fraction(-1, 3 * 4))), 2)
