"""Graded total symbols: truncated composition, inversion, commutators, powers.

A :class:`GradedSymbol` keeps the homogeneous parts of orders ``floor..top``.
Its part of order ``k`` is trusted only to x-degree ``k - floor``; anything
of higher x-degree is dropped on construction.  Composition preserves that
bookkeeping, so every retained coefficient is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb, factorial
from collections import Counter

from .symexpr import (Expr, add_all, at_origin, dX, dX_at_origin, dX_multi, dXi, dXi_multi,
                      inverse_monomial, is_homogeneous, mul, truncate)


class InsufficientTruncation(ValueError):
    pass


class NonInvertibleLeadingSymbol(ValueError):
    pass


class NonScalarB2(ValueError):
    pass


class GradingError(ValueError):
    pass


def times_i_power(e: Expr, r: int) -> Expr:
    """``e * i^r`` with exact bookkeeping of the imaginary flag."""
    r %= 4
    if r == 0:
        return e
    out = {}
    for (sc, xi, xn, xp, cl, im), c in e.items():
        im2 = im + (r & 1)
        sign = -1 if r >= 2 else 1
        if im2 == 2:
            im2, sign = 0, -sign
        out[(sc, xi, xn, xp, cl, im2)] = c * sign
    return Expr(out)


def multi_indices(n: int, r: int):
    """Multisets of size r over 1..n with their factorial weight alpha!."""
    for alpha in combinations_with_replacement(range(1, n + 1), r):
        fact = 1
        for cnt in Counter(alpha).values():
            fact *= factorial(cnt)
        yield alpha, fact


@dataclass(frozen=True)
class GradedSymbol:
    parts: dict
    floor: int
    n: int
    top: int = field(default=None)

    def __post_init__(self):
        top = self.top if self.top is not None else max(self.parts, default=self.floor)
        object.__setattr__(self, "top", top)
        clean = {}
        for k in range(self.floor, top + 1):
            e = self.parts.get(k, Expr())
            if not is_homogeneous(e, k):
                raise GradingError(f"part {k} is not homogeneous of order {k}: orders {sorted(e.orders())}")
            clean[k] = truncate(e, k - self.floor)
        for k in self.parts:
            if k < self.floor or k > top:
                if not self.parts[k].is_zero():
                    raise GradingError(f"part {k} outside retained range {self.floor}..{top}")
        object.__setattr__(self, "parts", clean)

    def part(self, k: int) -> Expr:
        if k < self.floor:
            raise InsufficientTruncation(f"order {k} is below the retained floor {self.floor}")
        return self.parts.get(k, Expr())

    def at_origin(self) -> dict:
        return {k: at_origin(e) for k, e in self.parts.items()}

    def map(self, fn) -> "GradedSymbol":
        return GradedSymbol({k: fn(e) for k, e in self.parts.items()}, self.floor, self.n, self.top)

    def with_floor(self, floor: int) -> "GradedSymbol":
        if floor < self.floor:
            raise InsufficientTruncation(f"cannot lower floor {self.floor} to {floor}")
        return GradedSymbol({k: e for k, e in self.parts.items() if k >= floor}, floor, self.n, self.top)

    def __sub__(self, other: "GradedSymbol") -> "GradedSymbol":
        floor = max(self.floor, other.floor)
        top = max(self.top, other.top)
        parts = {k: self.parts.get(k, Expr()) - other.parts.get(k, Expr()) for k in range(floor, top + 1)}
        return GradedSymbol(parts, floor, self.n, top)

    def __add__(self, other: "GradedSymbol") -> "GradedSymbol":
        floor = max(self.floor, other.floor)
        top = max(self.top, other.top)
        parts = {k: self.parts.get(k, Expr()) + other.parts.get(k, Expr()) for k in range(floor, top + 1)}
        return GradedSymbol(parts, floor, self.n, top)

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.parts.values())


def function_symbol(u: Expr, floor: int, n: int) -> GradedSymbol:
    """Multiplication by a function (or Clifford-valued field) as an order-0 symbol."""
    return GradedSymbol({0: u}, floor, n, 0)


def identity_symbol(floor: int, n: int) -> GradedSymbol:
    return function_symbol(Expr.const(1), floor, n)


def compose(A: GradedSymbol, B: GradedSymbol, floor: int, max_depth: int = 2) -> GradedSymbol:
    """Symbol of A∘B down to order ``floor``:  sum (-i)^|a|/a! d_xi^a A . d_x^a B."""
    if A.n != B.n:
        raise ValueError("dimension mismatch")
    n = A.n
    if A.floor > floor - B.top or B.floor > floor - A.top:
        raise InsufficientTruncation(
            f"need A to order {floor - B.top} (has {A.floor}) and B to order {floor - A.top} (has {B.floor})")
    depth = A.top + B.top - floor
    if depth > max_depth:
        raise InsufficientTruncation(f"composition needs derivative depth {depth} > max_depth {max_depth}")
    acc: dict[int, list] = {k: [] for k in range(floor, A.top + B.top + 1)}
    dxi_cache: dict = {}
    dx_cache: dict = {}
    for ka, a in A.parts.items():
        if a.is_zero():
            continue
        for kb, b in B.parts.items():
            if b.is_zero():
                continue
            for r in range(0, ka + kb - floor + 1):
                order = ka + kb - r
                cap = order - floor
                for alpha, fact in multi_indices(n, r):
                    key_a = (ka, alpha)
                    if key_a not in dxi_cache:
                        dxi_cache[key_a] = dXi_multi(a, alpha)
                    da = dxi_cache[key_a]
                    if da.is_zero():
                        continue
                    key_b = (kb, alpha, cap)
                    if key_b not in dx_cache:
                        dx_cache[key_b] = dX_multi(b, alpha, xcap=cap)
                    db = dx_cache[key_b]
                    if db.is_zero():
                        continue
                    t = mul(da, db, xcap=cap)
                    if t.is_zero():
                        continue
                    t = times_i_power(t, (3 * r) % 4).scale(Fraction(1, fact))
                    acc[order].append(t)
    return GradedSymbol({k: add_all(v) for k, v in acc.items()}, floor, n, A.top + B.top)


def _leading_unit(s2: Expr) -> Expr:
    """Split ``s2 = u |xi|^2 (1 + E)`` and return u, a commuting monomial."""
    lead = {}
    for key, c in s2.items():
        sc, xi, xn, xp, cl, im = key
        if cl:
            raise NonInvertibleLeadingSymbol("leading symbol carries Clifford words")
        if not xp:
            if xi or xn != 1:
                raise NonInvertibleLeadingSymbol(f"leading symbol at x0 is not a multiple of |xi|^2: {s2}")
            lead[key] = c
    if len(lead) != 1:
        raise NonInvertibleLeadingSymbol(f"leading coefficient is not a single invertible monomial: {Expr(lead)}")
    (sc, xi, xn, xp, cl, im), c = next(iter(lead.items()))
    return Expr({(sc, (), 0, (), (), im): c})


def invert(A: GradedSymbol, depth: int = 3) -> GradedSymbol:
    """Parametrix parts b_-2, b_-3, b_-4 of a second-order symbol (right inverse)."""
    if A.top != 2:
        raise NonInvertibleLeadingSymbol(f"expected a second-order symbol, top order is {A.top}")
    if not 1 <= depth <= 3:
        raise ValueError("depth must be 1, 2 or 3")
    if A.floor > 3 - depth:
        raise InsufficientTruncation(f"symbol retained only to order {A.floor}")
    n = A.n
    floor = -1 - depth
    axes = range(1, n + 1)
    s2, s1, s0 = A.part(2), A.parts.get(1, Expr()), A.parts.get(0, Expr())
    u = _leading_unit(s2)
    lead_inv = inverse_monomial(u) * Expr.xi_norm(-1)
    e = mul(s2, lead_inv) - Expr.const(1)
    if any(not k[3] for k, _ in e.items()):
        raise NonInvertibleLeadingSymbol("leading symbol is not u(x)|xi|_g^2")
    cap2 = -2 - floor
    series = Expr.const(1)
    power = Expr.const(1)
    for _ in range(cap2):
        power = mul(power, -e, xcap=cap2)
        series = series + power
    b2 = mul(lead_inv, series, xcap=cap2)
    parts = {-2: b2}

    if depth >= 2:
        cap3 = -3 - floor
        inner = mul(s1, b2, xcap=cap3)
        for a in axes:
            inner = inner - times_i_power(mul(dXi(s2, a), dX(b2, a, xcap=cap3), xcap=cap3), 1)
        b3 = -mul(b2, inner, xcap=cap3)
        parts[-3] = b3

    if depth >= 3:
        cap4 = -4 - floor
        inner = mul(s1, b3, xcap=cap4) + mul(s0, b2, xcap=cap4)
        for a in axes:
            inner = inner - times_i_power(mul(dXi(s1, a), dX(b2, a, xcap=cap4), xcap=cap4), 1)
            inner = inner - times_i_power(mul(dXi(s2, a), dX(b3, a, xcap=cap4), xcap=cap4), 1)
        for a in axes:
            for b in axes:
                d2 = dXi(dXi(s2, a), b)
                if d2.is_zero():
                    continue
                inner = inner - mul(d2, dX_multi(b2, (a, b), xcap=cap4), xcap=cap4).scale(Fraction(1, 2))
        parts[-4] = -mul(b2, inner, xcap=cap4)
    return GradedSymbol(parts, floor, n, -2)


def commutator_with_function(S: GradedSymbol, u: Expr, floor: int) -> GradedSymbol:
    """Symbol of [S, u] down to ``floor``:  sum_{|b|>=1} D_x^b(u)/b! d_xi^b sigma^S."""
    n = S.n
    if S.floor > floor + 1:
        raise InsufficientTruncation(f"S retained to {S.floor}, need {floor + 1}")
    top = S.top - 1
    acc: dict[int, list] = {k: [] for k in range(floor, top + 1)}
    for k, s in S.parts.items():
        if s.is_zero():
            continue
        for r in range(1, k - floor + 1):
            order = k - r
            cap = order - floor
            for beta, fact in multi_indices(n, r):
                ds = dXi_multi(s, beta)
                if ds.is_zero():
                    continue
                du = dX_multi(u, beta, xcap=cap)
                if du.is_zero():
                    continue
                t = times_i_power(mul(ds, du, xcap=cap), (3 * r) % 4).scale(Fraction(1, fact))
                acc[order].append(t)
    return GradedSymbol({k: add_all(v) for k, v in acc.items()}, floor, n, top)


def power_symbol_neg(inv: GradedSymbol, m: int, literal: bool = False) -> Expr:
    """Order -2m part of A^(-(m-1)) at x0 from b_-2, b_-3, b_-4.

    The middle bracket carries ``b_-2 d_xi(b_-2) d_x(b_-3)``.  With
    ``literal=True`` the factor ``b_-2`` is omitted, which reproduces a
    commonly printed variant that is not homogeneous for m >= 3.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    n = inv.n
    axes = range(1, n + 1)
    b2, b3, b4 = inv.part(-2), inv.part(-3), inv.part(-4)
    if b2.has_clifford():
        raise NonScalarB2("b_-2 carries Clifford words; product ordering would be ambiguous")
    B2 = at_origin(b2)
    B3 = at_origin(b3)
    B4 = at_origin(b4)

    def pw(k):
        return B2 ** k

    out = (pw(m - 2) * B4).scale(m - 1)
    c2 = comb(m - 1, 2)
    if c2 == 0:
        return out
    out = out + (pw(m - 3) * B3 * B3).scale(c2)

    dxi_b2 = {a: dXi(B2, a) for a in axes}
    dx_b2 = {a: dX_at_origin(b2, (a,)) for a in axes}
    dxi_b3 = {a: dXi(B3, a) for a in axes}
    dx_b3 = {a: dX_at_origin(b3, (a,)) for a in axes}

    bracket = add_all(
        B2 * dxi_b3[a] * dx_b2[a] + (Expr.const(1) if literal else B2) * dxi_b2[a] * dx_b3[a] + (B3 * dxi_b2[a] * dx_b2[a]).scale(m - 3)
        for a in axes)
    out = out - times_i_power(pw(m - 4) * bracket, 1).scale(c2)

    b2_lin = truncate(b2, 1)
    dxixi_b2 = {}
    dxx_b2 = {}
    dxidx_b2 = {}
    for a in axes:
        for b in axes:
            dxixi_b2[a, b] = dXi(dxi_b2[a], b)
            dxx_b2[a, b] = dX_at_origin(b2, (a, b))
            dxidx_b2[b, a] = dX_at_origin(dXi(b2_lin, b), (a,))
    group = []
    for a in axes:
        for b in axes:
            group.append((B2 * B2 * dxixi_b2[a, b] * dxx_b2[a, b]).scale(6))
            if m > 4 or m < 3:
                group.append((dxi_b2[a] * dxi_b2[b] * dx_b2[a] * dx_b2[b]).scale(3 * (m - 3) * (m - 4)))
            if m != 3:
                inner = (dxi_b2[a] * dxi_b2[b] * dxx_b2[a, b]
                         + dxi_b2[a] * dxidx_b2[b, a] * dx_b2[b]
                         + dxixi_b2[a, b] * dx_b2[a] * dx_b2[b])
                group.append((B2 * inner).scale(4 * (m - 3)))
    out = out - (pw(m - 5) * add_all(group)).scale(Fraction((m - 1) * (m - 2), 24))
    return out


def power_symbol_oracle(inv: GradedSymbol, m: int) -> Expr:
    """Order -2m part at x0 of the (m-1)-fold composition of the parametrix with itself."""
    if m < 2:
        raise ValueError("m must be >= 2")
    p = inv
    for j in range(1, m - 1):
        p = compose(inv, p, floor=-2 * (j + 1) - 2)
    return at_origin(p.part(-2 * m))


def residual(A: GradedSymbol, inv: GradedSymbol) -> GradedSymbol:
    """``sigma(A∘B) - 1`` on orders 0, -1, ... down to the accuracy of B."""
    prod = compose(A, inv, floor=inv.floor + A.top)
    parts = dict(prod.parts)
    parts[0] = parts.get(0, Expr()) - Expr.const(1)
    return GradedSymbol(parts, prod.floor, prod.n, prod.top)
