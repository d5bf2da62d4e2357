"""Jordan data of the perturbation and its rank-``r`` embedding ``P = B C``.

All index sets here are 0-based column indices into ``{0, ..., r-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.typing import NDArray

from .randmat import RNGLike, sample_haar_isometry

__all__ = [
    "JordanGroup",
    "JordanSpec",
    "BasisSpec",
    "GroupIndexing",
    "JordanIndexing",
    "PerturbationRealization",
    "jordan_block",
    "build_jcf",
    "indexing",
    "embed_perturbation",
    "MAX_RANK",
]

ComplexArray = NDArray[np.complex128]

MAX_RANK = 64
_MIN_RCOND = 1e-12


@dataclass(frozen=True)
class JordanGroup:
    """One eigenvalue with its blocks ``(p, beta)``, ``p`` strictly decreasing."""

    theta: complex
    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        blocks = tuple((int(p), int(beta)) for p, beta in self.blocks)
        if not blocks:
            raise ValueError("a Jordan group needs at least one block")
        for p, beta in blocks:
            if p < 1 or beta < 1:
                raise ValueError(f"block sizes and multiplicities must be >= 1, got {(p, beta)}")
        sizes = [p for p, _ in blocks]
        if any(a <= b for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"block sizes must be strictly decreasing, got {sizes}")
        object.__setattr__(self, "theta", complex(self.theta))
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return sum(p * beta for p, beta in self.blocks)

    @property
    def n_blocks(self) -> int:
        return sum(beta for _, beta in self.blocks)


@dataclass(frozen=True)
class JordanSpec:
    groups: tuple[JordanGroup, ...]

    def __post_init__(self) -> None:
        groups = tuple(g if isinstance(g, JordanGroup) else JordanGroup(*g) for g in self.groups)
        if not groups:
            raise ValueError("spec needs at least one group")
        thetas = [g.theta for g in groups]
        for i, t in enumerate(thetas):
            if any(t == s for s in thetas[:i]):
                raise ValueError(f"eigenvalue {t} appears in two groups")
        object.__setattr__(self, "groups", groups)
        if self.r > MAX_RANK:
            raise ValueError(f"total Jordan dimension {self.r} exceeds cap {MAX_RANK}")

    @property
    def r(self) -> int:
        return sum(g.dim for g in self.groups)

    @property
    def thetas(self) -> list[complex]:
        return [g.theta for g in self.groups]

    @classmethod
    def single(cls, theta: complex, blocks: Sequence[tuple[int, int]]) -> "JordanSpec":
        return cls((JordanGroup(theta, tuple(blocks)),))

    @classmethod
    def diagonal(cls, thetas: Sequence[complex]) -> "JordanSpec":
        return cls(tuple(JordanGroup(t, ((1, 1),)) for t in thetas))

    def to_json(self) -> dict[str, Any]:
        return {
            "groups": [
                {"theta": [g.theta.real, g.theta.imag], "blocks": [list(b) for b in g.blocks]}
                for g in self.groups
            ]
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "JordanSpec":
        groups = []
        for g in obj["groups"]:
            re, im = g["theta"]
            groups.append(JordanGroup(complex(re, im), tuple(tuple(b) for b in g["blocks"])))
        return cls(tuple(groups))


@dataclass(frozen=True)
class BasisSpec:
    """Change of basis ``Q`` with ``J = Q^-1 Po Q``."""

    q: ComplexArray

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=complex)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("Q must be square")
        if not np.all(np.isfinite(q)):
            raise ValueError("Q has non-finite entries")
        rcond = 1.0 / np.linalg.cond(q)
        if not rcond >= _MIN_RCOND:
            raise ValueError(f"Q is ill-conditioned (reciprocal condition {rcond:.3e})")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @classmethod
    def identity(cls, r: int) -> "BasisSpec":
        return cls(np.eye(r, dtype=complex))

    @property
    def r(self) -> int:
        return self.q.shape[0]

    @property
    def inverse(self) -> ComplexArray:
        return np.linalg.inv(self.q)

    def to_json(self) -> list[list[list[float]]]:
        return [[[z.real, z.imag] for z in row] for row in self.q]

    @classmethod
    def from_json(cls, obj: Any, r: int | None = None) -> "BasisSpec":
        if obj == "identity":
            if r is None:
                raise ValueError("identity basis needs the dimension r")
            return cls.identity(r)
        rows = []
        for row in obj:
            rows.append([complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x) for x in row])
        return cls(np.array(rows, dtype=complex))


@dataclass(frozen=True)
class GroupIndexing:
    first_cols: tuple[int, ...]
    last_cols: tuple[int, ...]
    k_sets: tuple[tuple[int, ...], ...]
    k_minus: tuple[tuple[int, ...], ...]
    l_sets: tuple[tuple[int, ...], ...]
    l_minus: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class JordanIndexing:
    """Index sets for every group: ``I`` (first columns), ``J`` (last columns),
    and per block class ``K``, ``K-``, ``L``, ``L-``."""

    groups: tuple[GroupIndexing, ...]

    def I(self, i: int) -> tuple[int, ...]:  # noqa: E743
        return self.groups[i].first_cols

    def J(self, i: int) -> tuple[int, ...]:
        return self.groups[i].last_cols

    def K(self, i: int, j: int) -> tuple[int, ...]:
        return self.groups[i].k_sets[j]

    def K_minus(self, i: int, j: int) -> tuple[int, ...]:
        return self.groups[i].k_minus[j]

    def L(self, i: int, j: int) -> tuple[int, ...]:
        return self.groups[i].l_sets[j]

    def L_minus(self, i: int, j: int) -> tuple[int, ...]:
        return self.groups[i].l_minus[j]


@dataclass(frozen=True)
class PerturbationRealization:
    P: ComplexArray
    B: ComplexArray
    C: ComplexArray
    J: ComplexArray
    W: ComplexArray = field(repr=False)


def jordan_block(theta: complex, p: int) -> ComplexArray:
    return theta * np.eye(p, dtype=complex) + np.eye(p, k=1, dtype=complex)


def build_jcf(spec: JordanSpec, extra_block: ComplexArray | None = None) -> ComplexArray:
    """Block-diagonal Jordan form, groups in spec order then ``extra_block``."""
    blocks = [jordan_block(g.theta, p) for g in spec.groups for p, beta in g.blocks for _ in range(beta)]
    if extra_block is not None:
        extra = np.atleast_2d(np.asarray(extra_block, dtype=complex))
        if extra.shape[0] != extra.shape[1]:
            raise ValueError("extra block must be square")
        blocks.append(extra)
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size), dtype=complex)
    pos = 0
    for b in blocks:
        k = b.shape[0]
        out[pos : pos + k, pos : pos + k] = b
        pos += k
    return out


def indexing(spec: JordanSpec) -> JordanIndexing:
    groups = []
    pos = 0
    for g in spec.groups:
        first: list[int] = []
        last: list[int] = []
        k_sets, k_minus, l_sets, l_minus = [], [], [], []
        for p, beta in g.blocks:
            k_minus.append(tuple(last))
            l_minus.append(tuple(first))
            ks, ls = [], []
            for _ in range(beta):
                ls.append(pos)
                ks.append(pos + p - 1)
                pos += p
            k_sets.append(tuple(ks))
            l_sets.append(tuple(ls))
            first.extend(ls)
            last.extend(ks)
        groups.append(
            GroupIndexing(
                first_cols=tuple(first),
                last_cols=tuple(last),
                k_sets=tuple(k_sets),
                k_minus=tuple(k_minus),
                l_sets=tuple(l_sets),
                l_minus=tuple(l_minus),
            )
        )
    return JordanIndexing(tuple(groups))


def embed_perturbation(
    spec: JordanSpec,
    basis: BasisSpec,
    n: int,
    rng: RNGLike | None,
    extra_block: ComplexArray | None = None,
) -> PerturbationRealization:
    """Embed ``Po = Q J Q^-1`` as ``P = W (Po 0; 0 0) W*`` in dimension ``n``.

    ``B = W (QJ; 0)`` and ``C = (Q^-1 0) W*`` so that ``C B = J`` and the
    ``r x r`` Gram products do not depend on ``n``.  Only the first ``r``
    columns of ``W`` enter.  ``rng=None`` is the null stream: ``W = I``.
    """
    jcf = build_jcf(spec, extra_block)
    r = jcf.shape[0]
    if basis.r != r:
        raise ValueError(f"basis has dimension {basis.r}, Jordan form has {r}")
    if n < r:
        raise ValueError(f"n={n} is smaller than the perturbation dimension r={r}")
    if rng is None:
        w = np.eye(n, r, dtype=complex)
    else:
        w = sample_haar_isometry(n, r, rng)
    q = basis.q
    b = w @ (q @ jcf)
    c = basis.inverse @ w.conj().T
    return PerturbationRealization(P=b @ c, B=b, C=c, J=jcf, W=w)
