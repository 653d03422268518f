"""Exact symbolic expressions for symbol calculus at a point.

An :class:`Expr` is a finite sum of terms

    coeff * (i)^imag * prod(jet^e) * prod(xi_k) * |xi|^(2p) * prod(x_a) * c(e_w)

with exact rational ``coeff``.  Jets are *fields*: a :class:`JetVar` with a
derivative multi-index stands for that partial derivative as a function of
x, so :func:`dX` simply extends the multi-index.  Curvature components are
constants.  Metric-dependent data (``g^{ab}``, Christoffel symbols, the spin
connection) enter as Taylor polynomials in the coordinate monomials ``x_a``
centred at the base point; ``|xi|^2`` always means the flat norm
``sum(xi_k^2)`` at that point.  Evaluating at the base point drops every
term carrying an ``x`` monomial.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import factorial
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple

from gmpy2 import mpq

from .clifford import word_product

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)

# jet kinds
F = "f"
X = "X"
XN = "XN"  # |X|^2 as a field; idx = (n,) so its derivative knows the dimension
RIEM = "R"
SCAL = "s"
TRID = "trid"

_DIFFERENTIABLE = {F, X, SCAL}


class UnboundVariable(KeyError):
    """A jet variable had no value in a numeric assignment."""


class NonScalarClifford(ValueError):
    """A Clifford word survived where a scalar was required."""


class JetVar(NamedTuple):
    kind: str
    idx: tuple = ()
    deriv: tuple = ()

    def d(self, *axes: int) -> "JetVar":
        return JetVar(self.kind, self.idx, tuple(sorted(self.deriv + axes)))

    @property
    def name(self) -> str:
        if self.kind == RIEM:
            return "R[" + ",".join(map(str, self.idx)) + "]"
        if self.kind == X:
            base = f"X{self.idx[0]}"
        elif self.kind == XN:
            base = "XN"
        else:
            base = self.kind
        if self.deriv:
            base += "_;" + ",".join(map(str, self.deriv))
        return base

    def __str__(self) -> str:
        return self.name


def xnorm_var(n: int) -> JetVar:
    return JetVar(XN, (n,))


# ---------------------------------------------------------------------------
# raw term keys:  (scalars, xi, xnorm, xpow, cliff, imag)

def _merge_scalars(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        s = d.get(v, 0) + e
        if s:
            d[v] = s
        else:
            del d[v]
    return tuple(sorted(d.items()))


def _merge_sorted(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def _mul_keys(k1: tuple, k2: tuple):
    sign, word = word_product(k1[4], k2[4])
    im = k1[5] + k2[5]
    if im == 2:
        sign = -sign
        im = 0
    key = (
        _merge_scalars(k1[0], k2[0]),
        _merge_sorted(k1[1], k2[1]),
        k1[2] + k2[2],
        _merge_sorted(k1[3], k2[3]),
        word,
        im,
    )
    return sign, key


_EMPTY_KEY = ((), (), 0, (), (), 0)


@dataclass(frozen=True)
class Term:
    coeff: Fraction
    scalars: tuple = ()
    xi: tuple = ()
    xi_norm_pow: int = 0
    xpow: tuple = ()
    cliff: tuple = ()
    imag: int = 0

    @property
    def key(self) -> tuple:
        return (self.scalars, self.xi, self.xi_norm_pow, self.xpow, self.cliff, self.imag)

    @property
    def order(self) -> int:
        return len(self.xi) + 2 * self.xi_norm_pow


class Expr:
    """Canonical exact sum of terms; immutable by convention."""

    __slots__ = ("_t",)

    def __init__(self, terms: Mapping | None = None, _trusted: bool = False):
        if _trusted:
            self._t = terms
        else:
            self._t = {k: Q(c) for k, c in (terms or {}).items() if c}

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, c) -> "Expr":
        return cls({_EMPTY_KEY: Q(c)})

    @classmethod
    def var(cls, v: JetVar, power: int = 1) -> "Expr":
        if power == 0:
            return cls.const(1)
        return cls({(((v, power),), (), 0, (), (), 0): ONE})

    @classmethod
    def xi(cls, *indices: int) -> "Expr":
        return cls({((), tuple(sorted(indices)), 0, (), (), 0): ONE})

    @classmethod
    def xi_norm(cls, p: int = 1) -> "Expr":
        """Flat ``|xi|^(2p)``."""
        return cls({((), (), p, (), (), 0): ONE})

    @classmethod
    def x(cls, *axes: int) -> "Expr":
        return cls({((), (), 0, tuple(sorted(axes)), (), 0): ONE})

    @classmethod
    def word(cls, word: tuple) -> "Expr":
        """A canonical (strictly increasing) Clifford word."""
        return cls({((), (), 0, (), tuple(word), 0): ONE})

    @classmethod
    def imag_unit(cls) -> "Expr":
        return cls({((), (), 0, (), (), 1): ONE})

    @classmethod
    def from_terms(cls, terms: Iterable[Term]) -> "Expr":
        out: dict = {}
        for t in terms:
            _acc(out, t.key, Q(t.coeff))
        return cls(_clean(out), _trusted=True)

    # -- inspection -------------------------------------------------------
    def items(self):
        return self._t.items()

    def terms(self) -> Iterator[Term]:
        for (sc, xi, xn, xp, cl, im), c in sorted(self._t.items(), key=_sort_key):
            yield Term(Fraction(int(c.numerator), int(c.denominator)), sc, xi, xn, xp, cl, im)

    def __len__(self) -> int:
        return len(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def __bool__(self) -> bool:
        return bool(self._t)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)) or type(other).__name__ == "mpq":
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._t == other._t

    def __hash__(self):
        return hash(frozenset(self._t.items()))

    def orders(self) -> set[int]:
        return {len(k[1]) + 2 * k[2] for k in self._t}

    def max_xdeg(self) -> int:
        return max((len(k[3]) for k in self._t), default=0)

    def has_clifford(self) -> bool:
        return any(k[4] for k in self._t)

    def has_imag(self) -> bool:
        return any(k[5] for k in self._t)

    def jets(self) -> set[JetVar]:
        return {v for k in self._t for v, _ in k[0]}

    def scalar_value(self):
        """The rational value of a constant expression (error otherwise)."""
        if not self._t:
            return Fraction(0)
        if set(self._t) != {_EMPTY_KEY}:
            raise ValueError(f"not a rational constant: {self}")
        c = self._t[_EMPTY_KEY]
        return Fraction(int(c.numerator), int(c.denominator))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "Expr":
        other = _coerce(other)
        if len(other._t) > len(self._t):
            big, small = other._t, self._t
        else:
            big, small = self._t, other._t
        out = dict(big)
        for k, c in small.items():
            _acc(out, k, c)
        return Expr(_clean(out), _trusted=True)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr({k: -c for k, c in self._t.items()}, _trusted=True)

    def __sub__(self, other) -> "Expr":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Expr":
        return _coerce(other) - self

    def __mul__(self, other) -> "Expr":
        return mul(self, _coerce(other))

    def __rmul__(self, other) -> "Expr":
        return mul(_coerce(other), self)

    def scale(self, c) -> "Expr":
        c = Q(c)
        if not c:
            return Expr()
        return Expr({k: v * c for k, v in self._t.items()}, _trusted=True)

    def __pow__(self, p: int) -> "Expr":
        if p < 0:
            return inverse_monomial(self) ** (-p)
        out = Expr.const(1)
        for _ in range(p):
            out = out * self
        return out

    def __repr__(self) -> str:
        return format_expr(self)

    __str__ = __repr__


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Expr.const(v)


def _acc(d: dict, k, c) -> None:
    s = d.get(k)
    d[k] = c if s is None else s + c


def _clean(d: dict) -> dict:
    return {k: c for k, c in d.items() if c}


def _sort_key(item):
    (sc, xi, xn, xp, cl, im), _ = item
    return (tuple((v, e) for v, e in sc), xi, xn, xp, cl, im)


def add_all(exprs: Iterable[Expr]) -> Expr:
    out: dict = {}
    for e in exprs:
        for k, c in e._t.items():
            _acc(out, k, c)
    return Expr(_clean(out), _trusted=True)


def mul(a: Expr, b: Expr, xcap: int | None = None) -> Expr:
    """Distributed product; with ``xcap`` drop terms of x-degree above it."""
    out: dict = {}
    if xcap is None:
        for k1, c1 in a._t.items():
            for k2, c2 in b._t.items():
                s, k = _mul_keys(k1, k2)
                _acc(out, k, c1 * c2 if s > 0 else -(c1 * c2))
    else:
        buckets: dict = {}
        for k2, c2 in b._t.items():
            buckets.setdefault(len(k2[3]), []).append((k2, c2))
        degs = sorted(buckets)
        for k1, c1 in a._t.items():
            room = xcap - len(k1[3])
            for d2 in degs:
                if d2 > room:
                    break
                for k2, c2 in buckets[d2]:
                    s, k = _mul_keys(k1, k2)
                    _acc(out, k, c1 * c2 if s > 0 else -(c1 * c2))
    return Expr(_clean(out), _trusted=True)


def product(factors: Iterable[Expr], xcap: int | None = None) -> Expr:
    out = Expr.const(1)
    for f in factors:
        out = mul(out, f, xcap)
    return out


def truncate(e: Expr, xcap: int) -> Expr:
    return Expr({k: c for k, c in e._t.items() if len(k[3]) <= xcap}, _trusted=True)


def at_origin(e: Expr) -> Expr:
    """Evaluate at the base point: every x-monomial vanishes there."""
    return Expr({k: c for k, c in e._t.items() if not k[3]}, _trusted=True)


def part_of_order(e: Expr, order: int) -> Expr:
    return Expr({k: c for k, c in e._t.items() if len(k[1]) + 2 * k[2] == order}, _trusted=True)


def is_homogeneous(e: Expr, order: int) -> bool:
    return all(len(k[1]) + 2 * k[2] == order for k in e._t)


def real_part(e: Expr) -> Expr:
    return Expr({k: c for k, c in e._t.items() if not k[5]}, _trusted=True)


def imag_part(e: Expr) -> Expr:
    """Coefficient of i, returned as a real expression."""
    return Expr({k[:5] + (0,): c for k, c in e._t.items() if k[5]}, _trusted=True)


def inverse_monomial(e: Expr) -> Expr:
    """Inverse of a single commuting monomial (negated exponents)."""
    if len(e._t) != 1:
        raise ValueError(f"not a monomial: {e}")
    ((sc, xi, xn, xp, cl, im), c), = e._t.items()
    if xi or xp or cl:
        raise ValueError(f"monomial is not invertible: {e}")
    coeff = 1 / c
    if im:
        coeff = -coeff
    return Expr({(tuple((v, -p) for v, p in sc), (), -xn, (), (), im): coeff}, _trusted=True)


# ---------------------------------------------------------------------------
# derivatives

@lru_cache(maxsize=None)
def _dvar(v: JetVar, a: int) -> Expr | None:
    if v.kind in _DIFFERENTIABLE:
        return Expr.var(v.d(a))
    if v.kind == XN:
        n = v.idx[0]
        return add_all(Expr.var(JetVar(X, (i,))) * Expr.var(JetVar(X, (i,), (a,))) for i in range(1, n + 1)).scale(2)
    return None  # constants: curvature, tr[id]


def dX(e: Expr, a: int, xcap: int | None = None, fields: bool = False) -> Expr:
    """Coordinate derivative d/dx_a.

    By default jets are constants (their values at x0) and only the explicit
    x-monomials are differentiated.  With ``fields=True`` the jets of f, X and
    |X|^2 are treated as functions and differentiated by the chain rule.
    With ``xcap`` only result terms of x-degree <= xcap are produced.
    """
    out: dict = {}
    for key, c in e._t.items():
        sc, xi, xn, xp, cl, im = key
        d = len(xp)
        if xcap is not None and d > xcap + 1:
            continue
        if fields and (xcap is None or d <= xcap):
            for j, (v, p) in enumerate(sc):
                dv = _dvar(v, a)
                if dv is None:
                    continue
                rest = sc[:j] + sc[j + 1:]
                if p != 1:
                    rest = tuple(sorted(rest + ((v, p - 1),)))
                base = (rest, xi, xn, xp, cl, im)
                cp = c * p
                for k2, c2 in dv._t.items():
                    _, k = _mul_keys(base, k2)
                    _acc(out, k, cp * c2)
        q = xp.count(a)
        if q:
            i = xp.index(a)
            _acc(out, (sc, xi, xn, xp[:i] + xp[i + 1:], cl, im), c * q)
    return Expr(_clean(out), _trusted=True)


def dXi(e: Expr, mu: int) -> Expr:
    """Derivative d/dxi_mu; ``|xi|^(2p)`` is the flat norm at the base point."""
    out: dict = {}
    for key, c in e._t.items():
        sc, xi, xn, xp, cl, im = key
        q = xi.count(mu)
        if q:
            i = xi.index(mu)
            _acc(out, (sc, xi[:i] + xi[i + 1:], xn, xp, cl, im), c * q)
        if xn:
            _acc(out, (sc, tuple(sorted(xi + (mu,))), xn - 1, xp, cl, im), c * 2 * xn)
    return Expr(_clean(out), _trusted=True)


def dX_multi(e: Expr, alpha: Iterable[int], xcap: int | None = None, fields: bool = False) -> Expr:
    alpha = tuple(alpha)
    for i, a in enumerate(alpha):
        e = dX(e, a, None if xcap is None else xcap + len(alpha) - i - 1, fields)
    return e


def dXi_multi(e: Expr, alpha: Iterable[int]) -> Expr:
    for a in alpha:
        e = dXi(e, a)
    return e


def dX_at_origin(e: Expr, alpha: tuple, fields: bool = False) -> Expr:
    """``d_x^alpha e`` at the base point.

    Each x-monomial must be consumed exactly by part of ``alpha``; with
    ``fields=True`` the rest of ``alpha`` acts on the jets.
    """
    alpha = tuple(alpha)
    k = len(alpha)
    target = tuple(sorted(alpha))
    by_rest: dict = {}
    for key, c in e._t.items():
        xp = key[3]
        if len(xp) > k or (not fields and xp != target):
            continue
        fact = 1
        for a in set(xp):
            fact *= factorial(xp.count(a))
        k2 = key[:3] + ((),) + key[4:]
        if not fields:
            _acc(by_rest.setdefault((), {}), k2, c * fact)
            continue
        for S in combinations(range(k), len(xp)):
            if tuple(sorted(alpha[i] for i in S)) != xp:
                continue
            rest = tuple(alpha[i] for i in range(k) if i not in S)
            _acc(by_rest.setdefault(rest, {}), k2, c * fact)
    out = []
    for rest, terms in by_rest.items():
        out.append(dX_multi(Expr(_clean(terms), _trusted=True), rest, fields=True))
    return add_all(out)


# ---------------------------------------------------------------------------
# substitution and numeric evaluation

def substitute(e: Expr, values: Mapping[JetVar, object]) -> Expr:
    """Replace jets by expressions or numbers (negative powers need monomials)."""
    cache: dict = {}

    def power(v, p):
        if (v, p) not in cache:
            val = values[v]
            val = val if isinstance(val, Expr) else Expr.const(val)
            cache[(v, p)] = val ** p
        return cache[(v, p)]

    parts = []
    for (sc, xi, xn, xp, cl, im), c in e._t.items():
        kept = tuple((v, p) for v, p in sc if v not in values)
        t = Expr({(kept, xi, xn, xp, cl, im): c}, _trusted=True)
        for v, p in sc:
            if v in values:
                t = t * power(v, p)
        parts.append(t)
    return add_all(parts)


@dataclass(frozen=True)
class Gaussian:
    """Exact Gaussian rational, returned by :func:`evaluate` when i survives."""

    re: Fraction
    im: Fraction


def _to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if type(v).__name__ == "mpq":
        return Fraction(int(v.numerator), int(v.denominator))
    return Fraction(v)


def evaluate(e: Expr, values: Mapping[JetVar, object], xi: Mapping[int, object] | None = None,
             xi_norm2=None, x: Mapping[int, object] | None = None, clifford: bool = False):
    """Exact numeric value of ``e``.

    ``values`` must bind every jet (including ``tr[id]`` when present).  The
    flat ``|xi|^2`` defaults to ``sum(xi_k^2)``.  With ``clifford=True`` the
    result is a dict ``word -> value`` instead of raising on Clifford words.
    """
    xi = {k: _to_fraction(v) for k, v in (xi or {}).items()}
    x = {k: _to_fraction(v) for k, v in (x or {}).items()}
    if xi_norm2 is None:
        xi_norm2 = sum((v * v for v in xi.values()), Fraction(0))
    xi_norm2 = _to_fraction(xi_norm2)
    re: dict = {}
    im: dict = {}
    for (sc, xs, xn, xp, cl, imag), c in e._t.items():
        if cl and not clifford:
            raise NonScalarClifford(f"Clifford word {cl} in scalar evaluation")
        val = _to_fraction(c)
        for v, p in sc:
            if v not in values:
                raise UnboundVariable(v.name)
            val *= _to_fraction(values[v]) ** p
        for k in xs:
            if k not in xi:
                raise UnboundVariable(f"xi_{k}")
            val *= xi[k]
        if xn:
            val *= xi_norm2 ** xn
        for a in xp:
            val *= x.get(a, Fraction(0))
        target = im if imag else re
        target[cl] = target.get(cl, Fraction(0)) + val
    if clifford:
        words = set(re) | set(im)
        out = {}
        for w in words:
            r, i = re.get(w, Fraction(0)), im.get(w, Fraction(0))
            v = r if i == 0 else Gaussian(r, i)
            if v != 0:
                out[w] = v
        return out
    r, i = re.get((), Fraction(0)), im.get((), Fraction(0))
    return r if i == 0 else Gaussian(r, i)


def evaluate_matrix(e: Expr, values: Mapping[JetVar, object], gammas, xi=None, xi_norm2=None, x=None):
    """Evaluate with Clifford generators realised as matrices ``gammas[k-1]``."""
    import numpy as np

    dim = gammas[0].shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    for word, val in evaluate(e, values, xi, xi_norm2, x, clifford=True).items():
        mat = np.eye(dim, dtype=complex)
        for k in word:
            mat = mat @ gammas[k - 1]
        if isinstance(val, Gaussian):
            num = complex(float(val.re), float(val.im))
        else:
            num = float(val)
        out += num * mat
    return out


# ---------------------------------------------------------------------------
# printing

def format_scalars(sc: tuple) -> str:
    parts = []
    for v, p in sorted(sc, key=lambda vp: vp[0].name):
        parts.append(v.name if p == 1 else f"{v.name}^{p}")
    return " ".join(parts)


def format_key(key: tuple) -> str:
    sc, xi, xn, xp, cl, im = key
    parts = []
    if im:
        parts.append("i")
    if sc:
        parts.append(format_scalars(sc))
    if xi:
        parts.append(" ".join(f"xi{k}" for k in xi))
    if xn:
        parts.append(f"|xi|^{2 * xn}")
    if xp:
        parts.append(" ".join(f"x{a}" for a in xp))
    if cl:
        parts.append("c(" + ",".join(map(str, cl)) + ")")
    return " ".join(parts) or "1"


def format_expr(e: Expr) -> str:
    if not e._t:
        return "0"
    chunks = []
    for k, c in sorted(e._t.items(), key=_sort_key):
        chunks.append(f"({c})*{format_key(k)}")
    return " + ".join(chunks)
