"""Clifford words over an orthonormal frame with c(e_i)c(e_j) + c(e_j)c(e_i) = -2 delta_ij."""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np


class IndexOutOfRange(ValueError):
    pass


@lru_cache(maxsize=None)
def word_product(w1: tuple, w2: tuple) -> tuple[int, tuple]:
    """Product of two canonical words as ``(sign, canonical word)``."""
    if not w2:
        return 1, w1
    if not w1:
        return 1, w2
    sign = 1
    out = list(w1)
    for b in w2:
        # move c(e_b) left past every larger generator
        k = sum(1 for a in out if a > b)
        if k & 1:
            sign = -sign
        if b in out:
            out.remove(b)
            sign = -sign  # c(e_b)^2 = -1
        else:
            out.insert(len(out) - k, b)
    return sign, tuple(out)


def normalize(raw: Sequence[int], n: int | None = None):
    """Canonical form of the product c(e_{raw[0]}) c(e_{raw[1]}) ..."""
    from .symexpr import Expr

    if n is not None:
        for k in raw:
            if not 1 <= k <= n:
                raise IndexOutOfRange(f"generator index {k} outside 1..{n}")
    sign, word = 1, ()
    for k in raw:
        s, word = word_product(word, (k,))
        sign *= s
    return Expr.word(word).scale(sign)


def trace(e):
    """Normalized trace: nonempty words vanish, the identity picks up tr[id]."""
    from .symexpr import TRID, Expr, JetVar

    trid = ((JetVar(TRID), 1),)
    out = {}
    for (sc, xi, xn, xp, cl, im), c in e.items():
        if cl:
            continue
        sc2 = tuple(sorted(sc + trid))
        k = (sc2, xi, xn, xp, (), im)
        out[k] = out.get(k, 0) + c
    return Expr(out)


def drop_trace_marker(e):
    """Replace the tr[id] marker by 1."""
    from .symexpr import TRID, Expr, JetVar

    trid = JetVar(TRID)
    out = {}
    for (sc, xi, xn, xp, cl, im), c in e.items():
        sc2 = tuple((v, p) for v, p in sc if v != trid)
        k = (sc2, xi, xn, xp, cl, im)
        out[k] = out.get(k, 0) + c
    return Expr(out)


def gamma_matrices(m: int) -> list[np.ndarray]:
    """Complex 2^m x 2^m matrices with c_i c_j + c_j c_i = -2 delta_ij."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    eye = np.eye(2, dtype=complex)

    def kron_all(mats):
        out = np.array([[1]], dtype=complex)
        for mat in mats:
            out = np.kron(out, mat)
        return out

    gammas = []
    for j in range(m):
        for s in (sx, sy):
            mats = [sz] * j + [s] + [eye] * (m - j - 1)
            gammas.append(1j * kron_all(mats))
    return gammas
