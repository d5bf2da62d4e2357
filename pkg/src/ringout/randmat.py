"""Seeded Haar-unitary and Ginibre sampling, and assembly of ``A = U T (V)``."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence, Union

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "SeededStream",
    "as_generator",
    "sample_haar_unitary",
    "sample_haar_isometry",
    "sample_ginibre",
    "assemble_isotropic",
    "write_matrix_csv",
    "read_matrix_csv",
]

ComplexArray = NDArray[np.complex128]

_MAX_RESAMPLE = 8


@dataclass(frozen=True)
class SeededStream:
    """Identifies one independent random stream.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
    distinct ``stream_index`` (or ``path``) values give independent
    generators and equal identifiers reproduce output bit for bit.
    """

    base_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must fit in 64 unsigned bits")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def child(self, index: int) -> "SeededStream":
        return SeededStream(self.base_seed, self.stream_index, self.path + (int(index),))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.base_seed, spawn_key=(self.stream_index, *self.path))
        return np.random.Generator(np.random.PCG64(seq))


RNGLike = Union[SeededStream, np.random.Generator]


def as_generator(rng: RNGLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededStream):
        return rng.generator()
    raise TypeError(f"expected SeededStream or numpy Generator, got {type(rng).__name__}")


def _complex_normal(gen: np.random.Generator, shape: tuple[int, ...], var: float = 1.0) -> ComplexArray:
    scale = np.sqrt(var / 2.0)
    return scale * gen.standard_normal(shape) + 1j * scale * gen.standard_normal(shape)


def _phase_corrected_qr(z: ComplexArray) -> ComplexArray:
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(d)
    if np.any(mag == 0.0):
        raise np.linalg.LinAlgError("degenerate QR pivot")
    # Z = (Q L)(L^-1 R) with L = diag(r_jj/|r_jj|) makes the triangular factor positive
    return q * (d / mag)[..., None, :]


def sample_haar_unitary(n: int, rng: RNGLike, size: int | None = None) -> ComplexArray:
    """Haar unitary ``n x n`` matrix (or a stack of ``size`` of them)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    shape = (n, n) if size is None else (size, n, n)
    for _ in range(_MAX_RESAMPLE):
        try:
            return _phase_corrected_qr(_complex_normal(gen, shape))
        except np.linalg.LinAlgError:
            continue
    raise RuntimeError("repeated degenerate QR while sampling Haar unitary")


def sample_haar_isometry(n: int, k: int, rng: RNGLike) -> ComplexArray:
    """First ``k`` columns of a Haar unitary ``n x n`` matrix."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    gen = as_generator(rng)
    for _ in range(_MAX_RESAMPLE):
        try:
            return _phase_corrected_qr(_complex_normal(gen, (n, k)))
        except np.linalg.LinAlgError:
            continue
    raise RuntimeError("repeated degenerate QR while sampling Haar isometry")


def sample_ginibre(n: int, rng: RNGLike) -> ComplexArray:
    """Circular complex Gaussian entries with ``E|g|^2 = 1/n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _complex_normal(as_generator(rng), (n, n), var=1.0 / n)


def assemble_isotropic(
    t_values: Sequence[float] | NDArray[np.float64],
    rng: RNGLike,
    form: Literal["UT", "UTV"] = "UT",
) -> ComplexArray:
    """``U diag(s)`` or ``U diag(s) V`` with independent Haar ``U`` and ``V``."""
    s = np.asarray(t_values, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("t_values must be a nonempty 1-d sequence")
    gen = as_generator(rng)
    n = s.size
    u = sample_haar_unitary(n, gen)
    a = u * s[None, :]
    if form == "UT":
        return a
    if form == "UTV":
        return a @ sample_haar_unitary(n, gen)
    raise ValueError(f"unknown form {form!r}")


def write_matrix_csv(path: str | Path, m: ComplexArray) -> None:
    """One CSV row per matrix row, real and imaginary parts interleaved."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in m:
            w.writerow([repr(float(x)) for z in row for x in (z.real, z.imag)])


def read_matrix_csv(path: str | Path) -> ComplexArray:
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    arr = np.asarray(rows, dtype=float)
    return arr[:, 0::2] + 1j * arr[:, 1::2]
