"""Normal-coordinate model of the geometry at the base point x0.

Conventions (fixed by the anchor tests):

* ``R_abab`` is the sectional curvature of the (a, b) plane, so the round
  sphere of curvature k has ``R_abcd = k (d_ac d_bd - d_ad d_bc)``.
* ``Ric_bd = sum_a R_abad`` and ``s = sum_{a,mu} R_{mu a mu a}``.
* ``g^{ab}(x) = d_ab + (1/3) R_{a mu b nu} x_mu x_nu + O(x^3)``.
* ``d_a sigma_b (x0) = -(1/8) sum_{s,t} R_abst c(e_s) c(e_t)``.
* ``Delta(f)(x0) = -sum_j d_j d_j f(x0)``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product as iproduct
from typing import Mapping

from .symexpr import (F, RIEM, SCAL, X, Expr, JetVar, add_all, at_origin, dX, dX_at_origin,
                      inverse_monomial, mul, substitute, truncate, xnorm_var)


class CurvatureError(ValueError):
    """Curvature data violates an algebraic symmetry or the first Bianchi identity."""


class ContextError(ValueError):
    pass


class JetOrderError(ValueError):
    """A jet of order above two reached evaluation at x0."""


def riem_canonical(a: int, b: int, c: int, d: int) -> list[tuple[int, tuple]]:
    """Express ``R_abcd`` in the basis of independent components.

    Basis: ``R[a,b,c,d]`` with ``a<b``, ``c<d``, ``(a,b) <= (c,d)``, excluding
    ``R[p,s,q,r]`` for ``p<q<r<s`` which the first Bianchi identity removes.
    """
    if a == b or c == d:
        return []
    sign = 1
    if a > b:
        a, b, sign = b, a, -sign
    if c > d:
        c, d, sign = d, c, -sign
    if (a, b) > (c, d):
        a, b, c, d = c, d, a, b
    if len({a, b, c, d}) == 4 and a < c < d < b:
        # R_psqr = R_prqs - R_pqrs
        p, q, r, s = a, c, d, b
        return [(sign, (p, r, q, s)), (-sign, (p, q, r, s))]
    return [(sign, (a, b, c, d))]


def _riem_images(a, b, c, d):
    yield (a, b, c, d), 1
    yield (b, a, c, d), -1
    yield (a, b, d, c), -1
    yield (b, a, d, c), 1
    yield (c, d, a, b), 1
    yield (d, c, a, b), -1
    yield (c, d, b, a), -1
    yield (d, c, b, a), 1


def complete_riemann(entries: Mapping[tuple, object], n: int) -> dict[tuple, Fraction]:
    """Fill in all components from a partial list; raise CurvatureError on violations."""
    full: dict[tuple, Fraction] = {}
    for (a, b, c, d), v in entries.items():
        v = Fraction(v)
        for idx in (a, b, c, d):
            if not 1 <= idx <= n:
                raise CurvatureError(f"index {idx} outside 1..{n} in R[{a},{b},{c},{d}]")
        if v == 0:
            continue
        if a == b or c == d:
            raise CurvatureError(f"antisymmetry R_abcd = -R_bacd = -R_abdc violated by R[{a},{b},{c},{d}] = {v}")
        for img, s in _riem_images(a, b, c, d):
            old = full.get(img)
            if old is not None and old != s * v:
                raise CurvatureError(
                    f"pair symmetry R_abcd = R_cdab (with antisymmetry) violated at R[{a},{b},{c},{d}]")
            full[img] = s * v
    rng = range(1, n + 1)
    for a, b, c, d in iproduct(rng, rng, rng, rng):
        tot = full.get((a, b, c, d), 0) + full.get((a, c, d, b), 0) + full.get((a, d, b, c), 0)
        if tot != 0:
            raise CurvatureError(
                f"first Bianchi identity R_abcd + R_acdb + R_adbc = 0 violated at (a,b,c,d)=({a},{b},{c},{d})")
    return full


def kulkarni_nomizu(h: list[list[Fraction]], k: list[list[Fraction]]) -> dict[tuple, Fraction]:
    """``(h o k)_abcd`` for symmetric h, k; always an algebraic curvature tensor."""
    n = len(h)
    out = {}
    for a, b, c, d in iproduct(range(n), repeat=4):
        v = (h[a][c] * k[b][d] + h[b][d] * k[a][c] - h[a][d] * k[b][c] - h[b][c] * k[a][d])
        if v:
            out[(a + 1, b + 1, c + 1, d + 1)] = Fraction(v) / 2
    return out


def random_riemann(n: int, rng: random.Random, terms: int = 3, span: int = 5) -> dict[tuple, Fraction]:
    """Generic rational curvature tensor as a sum of Kulkarni-Nomizu products."""
    total: dict[tuple, Fraction] = {}
    for _ in range(terms):
        h = [[Fraction(0)] * n for _ in range(n)]
        k = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                h[i][j] = h[j][i] = Fraction(rng.randint(-span, span), rng.randint(1, 3))
                k[i][j] = k[j][i] = Fraction(rng.randint(-span, span), rng.randint(1, 3))
        for key, v in kulkarni_nomizu(h, k).items():
            total[key] = total.get(key, 0) + v
    return {key: v for key, v in total.items() if v}


def sphere_riemann(n: int, kappa=1) -> dict[tuple, Fraction]:
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    return {key: v * Fraction(kappa) for key, v in kulkarni_nomizu(eye, eye).items()}


@dataclass(frozen=True, eq=False)
class JetContext:
    """Point data at x0.  ``None`` for a field means fully symbolic jets.

    ``riem`` maps index quadruples to values (completed by symmetry),
    ``f_jets`` maps a sorted derivative tuple to a value, ``x_jets`` maps
    ``(i, derivative tuple)`` to a value.  Missing numeric entries are zero.
    """

    m: int
    riem: Mapping[tuple, object] | None = None
    f_jets: Mapping[tuple, object] | None = None
    x_jets: Mapping[tuple, object] | None = None
    _riem_full: dict = field(default=None, repr=False)

    def __post_init__(self):
        if self.m < 2:
            raise ContextError(f"m must be >= 2, got {self.m}")
        if self.riem is not None:
            object.__setattr__(self, "_riem_full", complete_riemann(self.riem, self.n))
        if self.f_jets is not None:
            fj = {tuple(sorted(k)): Fraction(v) for k, v in self.f_jets.items()}
            for k in fj:
                if len(k) > 2:
                    raise JetOrderError(f"f-jet of order {len(k)} requested; only order <= 2 exists")
                if any(not 1 <= a <= self.n for a in k):
                    raise ContextError(f"f-jet index {k} out of range")
            if fj.get((), 0) == 0:
                raise ContextError("f must be nonzero at x0")
            object.__setattr__(self, "f_jets", fj)
        if self.x_jets is not None:
            xj = {(i, tuple(sorted(k))): Fraction(v) for (i, k), v in self.x_jets.items()}
            for i, k in xj:
                if len(k) > 2:
                    raise JetOrderError(f"X-jet of order {len(k)} requested; only order <= 2 exists")
                if not 1 <= i <= self.n or any(not 1 <= a <= self.n for a in k):
                    raise ContextError(f"X-jet index {(i, k)} out of range")
            if sum(xj.get((i, ()), 0) ** 2 for i in range(1, self.n + 1)) == 0:
                raise ContextError("|X|^2 must be nonzero at x0")
            object.__setattr__(self, "x_jets", xj)

    @property
    def n(self) -> int:
        return 2 * self.m

    @property
    def mode(self) -> str:
        given = [p is not None for p in (self.riem, self.f_jets, self.x_jets)]
        if all(given):
            return "numeric"
        if not any(given):
            return "symbolic"
        return "mixed"

    @property
    def axes(self) -> range:
        return range(1, self.n + 1)

    # -- curvature ----------------------------------------------------------
    @cached_property
    def _riem_cache(self) -> dict:
        return {}

    def riem_expr(self, a: int, b: int, c: int, d: int) -> Expr:
        key = (a, b, c, d)
        cache = self._riem_cache
        if key not in cache:
            for idx in key:
                if not 1 <= idx <= self.n:
                    raise IndexError(f"curvature index {idx} outside 1..{self.n}")
            if self._riem_full is not None:
                cache[key] = Expr.const(self._riem_full.get(key, 0))
            else:
                cache[key] = add_all(Expr.var(JetVar(RIEM, k)).scale(s) for s, k in riem_canonical(*key))
        return cache[key]

    def ric(self, a: int, b: int) -> Expr:
        return add_all(self.riem_expr(c, a, c, b) for c in self.axes)

    def scal(self) -> Expr:
        """Scalar curvature ``s = sum_{a,mu} R_{mu a mu a}``."""
        return add_all(self.riem_expr(mu, a, mu, a) for mu in self.axes for a in self.axes)

    # -- metric, Christoffel, spin connection as Taylor data ------------------
    def metric_inv_second_jet(self, mu: int, nu: int, al: int, be: int) -> Expr:
        """``d_mu d_nu g^{al be}(x0) = (1/3)(R_{al mu be nu} + R_{al nu be mu})``."""
        return (self.riem_expr(al, mu, be, nu) + self.riem_expr(al, nu, be, mu)).scale(Fraction(1, 3))

    def metric_inv(self, al: int, be: int) -> Expr:
        out = Expr.const(int(al == be))
        return out + add_all(self.riem_expr(al, mu, be, nu) * Expr.x(mu, nu)
                             for mu in self.axes for nu in self.axes).scale(Fraction(1, 3))

    def metric(self, al: int, be: int) -> Expr:
        out = Expr.const(int(al == be))
        return out - add_all(self.riem_expr(al, mu, be, nu) * Expr.x(mu, nu)
                             for mu in self.axes for nu in self.axes).scale(Fraction(1, 3))

    @cached_property
    def xi_norm_correction(self) -> Expr:
        """``h = |xi|_g^2(x) - |xi|^2`` to second order in x."""
        out: dict = {}
        third = Fraction(1, 3)
        for al, be, mu, nu in iproduct(self.axes, repeat=4):
            if al > be or mu > nu:
                continue
            # collect the four (al,be)x(mu,nu) orderings of R_{al mu be nu} xi_al xi_be x_mu x_nu
            r = self.riem_expr(al, mu, be, nu)
            if al != be:
                r = r + self.riem_expr(be, mu, al, nu)
            if mu != nu:
                r = r + self.riem_expr(al, nu, be, mu)
                if al != be:
                    r = r + self.riem_expr(be, nu, al, mu)
            mono = ((), (al, be), 0, (mu, nu), (), 0)
            for (sc, *_), c in r.items():
                key = (sc,) + mono[1:]
                out[key] = out.get(key, 0) + c * third
        return Expr(out)

    def xi_norm_sq(self) -> Expr:
        return Expr.xi_norm(1) + self.xi_norm_correction

    def xi_norm_pow(self, p: int) -> Expr:
        """``|xi|_g^(2p)`` accurate to second order in x."""
        return Expr.xi_norm(p) + (Expr.xi_norm(p - 1) * self.xi_norm_correction).scale(p)

    def raised_xi(self, mu: int) -> Expr:
        """``xi^mu = g^{mu nu} xi_nu`` to second order in x."""
        return add_all(self.metric_inv(mu, nu) * Expr.xi(nu) for nu in self.axes)

    def christoffel_contracted(self, k: int) -> Expr:
        """``Gamma^k = g^{ij} Gamma^k_ij`` to first order in x, derived from the metric."""
        parts = []
        for i in self.axes:
            parts.append(dX(self.metric(i, k), i))
            parts.append(dX(self.metric(i, i), k).scale(Fraction(-1, 2)))
        return truncate(add_all(parts), 1)

    def conn_first_jet(self, a: int, b: int) -> Expr:
        """``d_a sigma_b (x0) = -(1/8) sum_{s,t} R_abst c(e_s)c(e_t)``."""
        for idx in (a, b):
            if not 1 <= idx <= self.n:
                raise IndexError(f"index {idx} outside 1..{self.n}")
        return add_all(self.riem_expr(a, b, s, t) * Expr.word((s, t))
                       for s in self.axes for t in self.axes if s < t).scale(Fraction(-1, 4))

    def spin_connection_up(self, mu: int) -> Expr:
        """``sigma^mu = g^{mu nu} sigma_nu`` to first order (equal to sigma_mu there)."""
        return self.spin_connection(mu)

    def spin_connection(self, i: int) -> Expr:
        """``sigma_i(x)`` to first order in x (it vanishes at x0)."""
        return add_all(Expr.x(a) * self.conn_first_jet(a, i) for a in self.axes)

    # -- perturbation fields --------------------------------------------------
    def f(self) -> Expr:
        return self.f_jet()

    def f_jet(self, *deriv: int) -> Expr:
        """A jet of f: a number in numeric contexts, a variable otherwise."""
        v = JetVar(F, (), tuple(sorted(deriv)))
        if self.f_jets is not None:
            return Expr.const(self._jet_value(v))
        return Expr.var(v)

    def x_comp(self, i: int, *deriv: int) -> Expr:
        v = JetVar(X, (i,), tuple(sorted(deriv)))
        if self.x_jets is not None:
            return Expr.const(self._jet_value(v))
        return Expr.var(v)

    def cx(self, *deriv: int) -> Expr:
        """``d^deriv c(X) = sum_i d^deriv X^i c(e_i)`` in the orthonormal frame."""
        return add_all(self.x_comp(i, *deriv) * Expr.word((i,)) for i in self.axes)

    def xnorm(self, power: int = 1) -> Expr:
        """``|X|^(2 power)`` as a field."""
        if self.x_jets is not None:
            return Expr.const(self._jet_value(xnorm_var(self.n)) ** power)
        return Expr.var(xnorm_var(self.n), power)

    def xnorm_explicit(self) -> Expr:
        return add_all(self.x_comp(i) * self.x_comp(i) for i in self.axes)

    # -- evaluation at x0 -----------------------------------------------------
    def _jet_value(self, v: JetVar):
        if v.kind in (F, X) and len(v.deriv) > 2:
            raise JetOrderError(f"jet {v.name} has order {len(v.deriv)} > 2")
        if v.kind == F and self.f_jets is not None:
            return self.f_jets.get(v.deriv, Fraction(0))
        if v.kind == X and self.x_jets is not None:
            return self.x_jets.get((v.idx[0], v.deriv), Fraction(0))
        if v.kind == "XN" and self.x_jets is not None:
            return sum((self.x_jets.get((i, ()), 0) ** 2 for i in self.axes), Fraction(0))
        if v.kind == SCAL:
            return self.scal() if self._riem_full is None else self.scal().scalar_value()
        return None

    def at_x0(self, e: Expr) -> Expr:
        """Value at x0: drop x-monomials, substitute whatever jets are numeric."""
        e = at_origin(e)
        values = {}
        for v in e.jets():
            val = self._jet_value(v)
            if val is not None:
                values[v] = val
        return substitute(e, values) if values else e

    def numeric_values(self, e: Expr) -> dict:
        """Numeric bindings for every jet of ``e`` that this context fixes."""
        values = {}
        for v in e.jets():
            val = self._jet_value(v)
            if val is not None and not isinstance(val, Expr):
                values[v] = val
        return values

    def canonical(self, e: Expr, xi: bool = True) -> Expr:
        """Unique normal form modulo ``|X|^2 = sum X_i^2`` and ``|xi|^2 = sum xi_k^2``.

        Powers of ``X1`` (no derivatives) and, if ``xi``, of ``xi_1`` are reduced below 2.
        """
        reduce_xi = xi
        x1 = JetVar(X, (1,))
        xn = xnorm_var(self.n)
        out: dict = {}
        stack = list(e.items())
        while stack:
            key, c = stack.pop()
            sc, xi, xnp, xp, cl, im = key
            p1 = dict(sc).get(x1, 0)
            if p1 >= 2:
                d = dict(sc)
                d[x1] = p1 - 2
                if not d[x1]:
                    del d[x1]
                base = tuple(sorted(d.items()))
                stack.append(((_bump(base, xn, 1), xi, xnp, xp, cl, im), c))
                for i in range(2, self.n + 1):
                    stack.append(((_bump(base, JetVar(X, (i,)), 2), xi, xnp, xp, cl, im), -c))
                continue
            if reduce_xi and xi.count(1) >= 2:
                rest = list(xi)
                rest.remove(1)
                rest.remove(1)
                stack.append(((sc, tuple(rest), xnp + 1, xp, cl, im), c))
                for k in range(2, self.n + 1):
                    stack.append(((sc, tuple(sorted(rest + [k, k])), xnp, xp, cl, im), -c))
                continue
            out[key] = out.get(key, 0) + c
        return Expr(out)

    # -- derived invariants at x0 ---------------------------------------------
    def laplacian(self, fld: Expr) -> Expr:
        """``Delta(u)(x0) = -sum_j d_j d_j u`` for a Taylor expansion ``u`` in x."""
        return -add_all(dX_at_origin(fld, (j, j)) for j in self.axes)

    def grad_sq(self, fld: Expr) -> Expr:
        """``|grad u|^2 (x0) = sum_j (d_j u)^2``."""
        parts = []
        for j in self.axes:
            g = dX_at_origin(fld, (j,))
            parts.append(g * g)
        return add_all(parts)

    def grad_x_sq(self) -> Expr:
        """``sum_j |nabla_{e_j} X|^2`` at x0 (frame components, connection vanishes)."""
        return add_all(self.x_comp(i, j) * self.x_comp(i, j) for i in self.axes for j in self.axes)


def _bump(sc: tuple, v: JetVar, p: int) -> tuple:
    d = dict(sc)
    d[v] = d.get(v, 0) + p
    if not d[v]:
        del d[v]
    return tuple(sorted(d.items()))


def random_context(m: int, seed: int = 0, riem: bool = True, f: bool = True, x: bool = True,
                   span: int = 4) -> JetContext:
    """Numeric context with random rational jets; ``False`` leaves a part symbolic."""
    rng = random.Random(seed)
    n = 2 * m

    def r(nonzero=False):
        while True:
            v = Fraction(rng.randint(-span, span), rng.randint(1, 3))
            if v or not nonzero:
                return v

    fj = None
    if f:
        fj = {(): r(True)}
        for a in range(1, n + 1):
            fj[(a,)] = r()
            for b in range(a, n + 1):
                fj[(a, b)] = r()
    xj = None
    if x:
        xj = {}
        for i in range(1, n + 1):
            xj[(i, ())] = r(i == 1)
            for a in range(1, n + 1):
                xj[(i, (a,))] = r()
                for b in range(a, n + 1):
                    xj[(i, (a, b))] = r()
    rm = random_riemann(n, rng) if riem else None
    return JetContext(m, rm, fj, xj)


# ---------------------------------------------------------------------------
# Taylor data of the perturbing fields

def taylor_field(ctx: JetContext, jet) -> Expr:
    """``u(x) = u + x_a u_;a + (1/2) x_a x_b u_;ab`` from a jet accessor ``jet(*deriv)``."""
    out = [jet()]
    for a in ctx.axes:
        out.append(jet(a) * Expr.x(a))
        for b in ctx.axes:
            out.append((jet(a, b) * Expr.x(a, b)).scale(Fraction(1, 2)))
    return add_all(out)


def taylor_f(ctx: JetContext) -> Expr:
    return taylor_field(ctx, lambda *d: ctx.f_jet(*d))


def taylor_cx(ctx: JetContext) -> Expr:
    return taylor_field(ctx, lambda *d: ctx.cx(*d))


def taylor_reciprocal(u: Expr, cap: int, ctx: JetContext | None = None) -> Expr:
    """``1/u(x)`` to x-degree ``cap``; the value at x0 must be a single monomial."""
    if ctx is not None:
        u = ctx.canonical(u, xi=False)
    u0 = at_origin(u)
    inv0 = inverse_monomial(u0)
    delta = mul(u - u0, inv0, xcap=cap)
    out = Expr.const(1)
    power = Expr.const(1)
    for _ in range(cap):
        power = mul(power, -delta, xcap=cap)
        out = out + power
    return mul(inv0, out, xcap=cap)


def xnorm_taylor(ctx: JetContext) -> Expr:
    """``|X(x)|^2`` to second order, in canonical form."""
    c = taylor_cx(ctx)
    return ctx.canonical(-mul(c, c, xcap=2), xi=False)
