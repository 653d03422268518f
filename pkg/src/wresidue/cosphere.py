"""Unit-cosphere integration of symbols and the resulting residue densities."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import gamma, pi, prod

import numpy as np

from .symexpr import TRID, Expr, JetVar, format_scalars, is_homogeneous


class ImaginaryResidue(ValueError):
    pass


class NonHomogeneous(ValueError):
    pass


def _double_factorial_odd(k: int) -> int:
    """(k-1)!! for even k (number of perfect matchings of k points)."""
    return prod(range(k - 1, 0, -2)) if k > 0 else 1


def sphere_moment(indices, n: int) -> Fraction:
    """Average of ``xi_{i1} ... xi_{ik}`` over the unit sphere in R^n."""
    indices = tuple(indices)
    if len(indices) % 2:
        return Fraction(0)
    counts = Counter(indices)
    if any(c % 2 for c in counts.values()):
        return Fraction(0)
    num = prod(_double_factorial_odd(c) for c in counts.values())
    k = len(indices) // 2
    den = prod(n + 2 * j for j in range(k))
    return Fraction(num, den)


def mc_moment_oracle(indices, n: int, samples: int = 10**6, seed: int = 0,
                     batch: int = 200_000) -> tuple[float, float]:
    """Monte Carlo sphere average with its standard error (normalized Gaussians)."""
    if samples < 10**4:
        raise ValueError("samples must be >= 10^4")
    rng = np.random.default_rng(seed)
    idx = [i - 1 for i in indices]
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        g = rng.standard_normal((b, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        v = np.prod(g[:, idx], axis=1) if idx else np.ones(b)
        total += float(v.sum())
        total_sq += float((v * v).sum())
        done += b
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, (var / samples) ** 0.5


def sphere_volume(n: int) -> float:
    """``Vol(S^{n-1}) = 2 pi^{n/2} / Gamma(n/2)``."""
    return 2 * pi ** (n / 2) / gamma(n / 2)


@dataclass(frozen=True)
class Density:
    """Polynomial in jets; the full density is ``terms * tr[id] * Vol(S^{n-1})``, ``tr[id] = 2^m``."""

    m: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, c in self.terms.items():
            c = Fraction(c)
            if c:
                clean[tuple(sorted(k, key=lambda vp: vp[0]))] = c
        object.__setattr__(self, "terms", clean)

    @classmethod
    def from_expr(cls, e: Expr, m: int) -> "Density":
        out: dict = {}
        for t in e.terms():
            if t.xi or t.xi_norm_pow or t.xpow or t.cliff:
                raise NonHomogeneous(f"density term still depends on xi, x or Clifford words: {t}")
            if t.imag:
                raise ImaginaryResidue(f"imaginary coefficient in density term {t}")
            out[t.scalars] = out.get(t.scalars, 0) + t.coeff
        return cls(m, out)

    def to_expr(self) -> Expr:
        return Expr({(k, (), 0, (), (), 0): c for k, c in self.terms.items()})

    def __add__(self, other: "Density") -> "Density":
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return Density(self.m, out)

    def __sub__(self, other: "Density") -> "Density":
        return self + other.scale(-1)

    def scale(self, c) -> "Density":
        return Density(self.m, {k: v * Fraction(c) for k, v in self.terms.items()})

    def _check(self, other):
        if self.m != other.m:
            raise ValueError(f"densities for m={self.m} and m={other.m} cannot be combined")

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, Density) and self.m == other.m and self.terms == other.terms

    def __hash__(self):
        return hash((self.m, frozenset(self.terms.items())))

    def coefficient(self, key: tuple) -> Fraction:
        return self.terms.get(tuple(sorted(key, key=lambda vp: vp[0])), Fraction(0))

    def items(self):
        """``(termKey, coefficient)`` pairs sorted by termKey."""
        return sorted(((format_scalars(k) or "1", c) for k, c in self.terms.items()))

    def prefactor(self, evaluate: bool = False) -> dict:
        if evaluate:
            return {"volSphere": sphere_volume(2 * self.m), "trId": 2 ** self.m}
        return {"volSphere": True, "trId": "2^m"}

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*{k}" for k, c in self.items()) or "0"
        return f"Density(m={self.m}: {body})"


def trace_integrate(e: Expr, m: int) -> Density:
    """Clifford trace and cosphere average of an order ``-2m`` symbol at x0.

    Nonempty Clifford words have zero trace; the identity contributes the
    ``tr[id]`` factor kept in the density prefactor.
    """
    if not is_homogeneous(e, -2 * m):
        raise NonHomogeneous(f"expected order {-2 * m}, found orders {sorted(e.orders())}")
    n = 2 * m
    trid = JetVar(TRID)
    real: dict = {}
    imag: dict = {}
    for t in e.terms():
        if t.xpow:
            raise NonHomogeneous(f"symbol still depends on x: {t}")
        if t.cliff:
            continue
        mom = sphere_moment(t.xi, n)
        if not mom:
            continue
        sc = tuple((v, p) for v, p in t.scalars if v != trid)
        target = imag if t.imag else real
        target[sc] = target.get(sc, 0) + t.coeff * mom
    leftover = {k: c for k, c in imag.items() if c}
    if leftover:
        raise ImaginaryResidue(f"imaginary part survives integration: {Density(m, leftover)}")
    return Density(m, real)
