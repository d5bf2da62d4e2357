"""Exact unitary Weingarten calculus over the rationals.

``Wg(sigma, n)`` is a class function on ``S_k``.  It is obtained by solving
the Gram relation ``sum_tau n^{#cycles(sigma^-1 tau)} Wg(tau) = [sigma = id]``
restricted to cycle-type classes, in :class:`fractions.Fraction` arithmetic.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

__all__ = [
    "MAX_ORDER",
    "Perm",
    "partitions",
    "WeingartenTable",
    "weingarten_table",
    "weingarten",
    "gram_residuals",
    "unitary_moment",
    "four_trace_expectation",
    "four_trace_by_expansion",
]

MAX_ORDER = 7


@dataclass(frozen=True)
class Perm:
    """Bijection of ``{0, ..., k-1}`` given by its images."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        imgs = tuple(int(x) for x in self.images)
        if sorted(imgs) != list(range(len(imgs))):
            raise ValueError(f"{imgs} is not a permutation")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def identity(cls, k: int) -> "Perm":
        return cls(tuple(range(k)))

    @classmethod
    def from_cycles(cls, k: int, cycles: Sequence[Sequence[int]]) -> "Perm":
        imgs = list(range(k))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                imgs[a] = b
        return cls(tuple(imgs))

    @property
    def k(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Perm") -> "Perm":
        """Composition ``(self * other)(i) = self(other(i))``."""
        return Perm(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Perm":
        inv = [0] * self.k
        for i, j in enumerate(self.images):
            inv[j] = i
        return Perm(tuple(inv))

    def cycle_type(self) -> tuple[int, ...]:
        return _cycle_type(self.images)

    def n_cycles(self) -> int:
        return len(self.cycle_type())

    def length(self) -> int:
        """Minimal number of transpositions, ``k - #cycles``."""
        return self.k - self.n_cycles()


def _cycle_type(images: Sequence[int]) -> tuple[int, ...]:
    seen = [False] * len(images)
    lengths = []
    for start in range(len(images)):
        if seen[start]:
            continue
        ln = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = images[j]
            ln += 1
        lengths.append(ln)
    return tuple(sorted(lengths, reverse=True))


def _n_cycles(images: Sequence[int]) -> int:
    return len(_cycle_type(images))


@lru_cache(maxsize=None)
def partitions(k: int) -> tuple[tuple[int, ...], ...]:
    """Integer partitions of ``k`` in decreasing parts, ``(k,)`` first."""

    def gen(rest: int, cap: int) -> list[tuple[int, ...]]:
        if rest == 0:
            return [()]
        out = []
        for part in range(min(rest, cap), 0, -1):
            out.extend((part,) + tail for tail in gen(rest - part, part))
        return out

    return tuple(gen(k, k))


def _representative(shape: tuple[int, ...]) -> tuple[int, ...]:
    imgs = []
    pos = 0
    for ln in shape:
        imgs.extend(pos + (i + 1) % ln for i in range(ln))
        pos += ln
    return tuple(imgs)


@lru_cache(maxsize=None)
def _class_polynomials(k: int) -> tuple[tuple[tuple[int, ...], ...], tuple[tuple[Counter, ...], ...]]:
    """For class representatives ``s_lam`` and classes ``mu``: a Counter
    ``{c: #{tau in mu : #cycles(s_lam^-1 tau) = c}}``."""
    classes = partitions(k)
    pos = {shape: i for i, shape in enumerate(classes)}
    perms = list(itertools.permutations(range(k)))
    shape_of = [pos[_cycle_type(t)] for t in perms]
    rows = []
    for lam in classes:
        rep = _representative(lam)
        rep_inv = [0] * k
        for i, j in enumerate(rep):
            rep_inv[j] = i
        row = [Counter() for _ in classes]
        for tau, mu in zip(perms, shape_of):
            # (rep^-1 tau)(i) = rep^-1(tau(i))
            row[mu][_n_cycles([rep_inv[tau[i]] for i in range(k)])] += 1
        rows.append(tuple(row))
    return classes, tuple(rows)


@dataclass(frozen=True)
class WeingartenTable:
    k: int
    n: int
    values: dict[tuple[int, ...], Fraction]

    def __getitem__(self, sigma: Perm | tuple[int, ...]) -> Fraction:
        shape = sigma.cycle_type() if isinstance(sigma, Perm) else tuple(sigma)
        return self.values[shape]

    def to_json(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "n": self.n,
            "values": [{"cycle_type": list(s), "value": str(v)} for s, v in self.values.items()],
        }


def _check_order(k: int, n: int) -> None:
    if k < 1:
        raise ValueError("order k must be >= 1")
    if k > MAX_ORDER:
        raise ValueError(f"order cap: k={k} exceeds {MAX_ORDER}")
    if n < k:
        raise ValueError(f"need n >= k for an invertible Gram system, got n={n}, k={k}")


def _solve_exact(mat: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    size = len(rhs)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for col in range(size):
        piv = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular class Gram system")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[i][size] for i in range(size)]


@lru_cache(maxsize=256)
def weingarten_table(k: int, n: int) -> WeingartenTable:
    _check_order(k, n)
    classes, polys = _class_polynomials(k)
    mat = [[Fraction(sum(cnt * n**c for c, cnt in cell.items())) for cell in row] for row in polys]
    rhs = [Fraction(int(lam == (1,) * k)) for lam in classes]
    sol = _solve_exact(mat, rhs)
    return WeingartenTable(k=k, n=n, values=dict(zip(classes, sol)))


def weingarten(sigma: Perm, n: int) -> Fraction:
    return weingarten_table(sigma.k, n)[sigma]


def gram_residuals(k: int, n: int) -> list[Fraction]:
    """``sum_tau n^{#(sigma^-1 tau)} Wg(tau) - [sigma = id]`` for every ``sigma``."""
    table = weingarten_table(k, n)
    perms = list(itertools.permutations(range(k)))
    wg = [table.values[_cycle_type(t)] for t in perms]
    ident = tuple(range(k))
    out = []
    for sigma in perms:
        inv = [0] * k
        for i, j in enumerate(sigma):
            inv[j] = i
        total = sum(
            (n ** _n_cycles([inv[tau[i]] for i in range(k)]) * w for tau, w in zip(perms, wg)),
            Fraction(0),
        )
        out.append(total - (1 if sigma == ident else 0))
    return out


def _matchings(src: Sequence[Any], dst: Sequence[Any]) -> list[tuple[int, ...]]:
    """Permutations ``s`` with ``src[a] == dst[s(a)]`` for every ``a``."""
    k = len(src)
    out: list[tuple[int, ...]] = []

    def rec(a: int, used: list[bool], acc: list[int]) -> None:
        if a == k:
            out.append(tuple(acc))
            return
        for b in range(k):
            if not used[b] and dst[b] == src[a]:
                used[b] = True
                acc.append(b)
                rec(a + 1, used, acc)
                acc.pop()
                used[b] = False

    rec(0, [False] * k, [])
    return out


def unitary_moment(
    rows: Sequence[int],
    cols: Sequence[int],
    rows_c: Sequence[int],
    cols_c: Sequence[int],
    n: int,
) -> Fraction:
    """``E[u_{i1 j1} ... u_{ik jk} conj(u_{i'1 j'1}) ... conj(u_{i'k j'k})]`` exactly.

    ``rows``/``cols`` index the plain factors, ``rows_c``/``cols_c`` the
    conjugated ones.
    """
    k = len(rows)
    if not (len(cols) == len(rows_c) == len(cols_c) == k):
        raise ValueError("all four index tuples must have the same length")
    if k == 0:
        return Fraction(1)
    if Counter(rows) != Counter(rows_c) or Counter(cols) != Counter(cols_c):
        return Fraction(0)
    return _moment_cached(tuple(rows), tuple(cols), tuple(rows_c), tuple(cols_c), n)


@lru_cache(maxsize=200_000)
def _moment_cached(rows: tuple, cols: tuple, rows_c: tuple, cols_c: tuple, n: int) -> Fraction:
    k = len(rows)
    table = weingarten_table(k, n)
    sigmas = _matchings(rows, rows_c)
    taus = _matchings(cols, cols_c)
    total = Fraction(0)
    for s in sigmas:
        s_inv = [0] * k
        for i, j in enumerate(s):
            s_inv[j] = i
        for t in taus:
            total += table.values[_cycle_type([t[s_inv[i]] for i in range(k)])]
    return total


def _tr(m: Any) -> Any:
    return sum(m[i][i] for i in range(len(m)))


def _mm(x: Any, y: Any) -> Any:
    n = len(x)
    return [[sum(x[i][l] * y[l][j] for l in range(n)) for j in range(n)] for i in range(n)]


def four_trace_expectation(a: Any, b: Any, c: Any, d: Any, n: int | None = None) -> Any:
    """``E Tr(A V B V* C V D V*)`` over Haar ``V`` from eight traces.

    Works on float/complex arrays as well as nested lists of
    :class:`~fractions.Fraction` (exact result).
    """
    exact = not isinstance(a, np.ndarray)
    n = len(a) if n is None else n
    if exact:
        a, b, c, d = ([list(row) for row in m] for m in (a, b, c, d))
        mul, tr = _mm, _tr
    else:
        mul, tr = (lambda x, y: x @ y), np.trace
    if n == 1:
        return a[0][0] * b[0][0] * c[0][0] * d[0][0]
    if n < 1:
        raise ValueError("n must be >= 1")
    tr_ac, tr_bd = tr(mul(a, c)), tr(mul(b, d))
    ta, tb, tc, td = tr(a), tr(b), tr(c), tr(d)
    one = Fraction(1) if exact else 1.0
    first = one / (n * n - 1) * (tr_ac * tb * td + ta * tc * tr_bd)
    second = one / (n * (n * n - 1)) * (tr_ac * tr_bd + ta * tc * tb * td)
    return first - second


def four_trace_by_expansion(a: Any, b: Any, c: Any, d: Any) -> Fraction:
    """Same expectation by summing Weingarten moments over all index tuples.

    ``Tr(A V B V* C V D V*) = sum A_xy V_yz B_zw conj(V_vw) C_vt V_ts D_sh conj(V_xh)``;
    only tuples whose row and column multisets balance are visited.
    """
    n = len(a)
    total = Fraction(0)
    rng = range(n)
    for y, t, z, s in itertools.product(rng, rng, rng, rng):
        # plain factors V_yz, V_ts; conjugated factors V_vw, V_xh
        for v, x in set(itertools.permutations((y, t))):
            for w, h in set(itertools.permutations((z, s))):
                coeff = a[x][y] * b[z][w] * c[v][t] * d[s][h]
                if coeff == 0:
                    continue
                total += coeff * unitary_moment((y, t), (z, s), (v, x), (w, h), n)
    return total
