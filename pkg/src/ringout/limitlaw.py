"""Limiting fluctuation laws of the outliers.

The rescaled outliers of class ``(i, j)`` converge to the ``p_ij``-th roots
of the eigenvalues of a Schur complement ``M_j^theta_i`` built from a
circular complex Gaussian array ``m``.  This module builds the covariance of
``m``, samples it, forms the ``M`` matrices and evaluates the closed forms
available for special structures of ``Q``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray

from .jordan import BasisSpec, JordanIndexing, JordanSpec, indexing
from .randmat import RNGLike, as_generator

__all__ = [
    "SpikeBelowRadiusError",
    "SingularSchurBlock",
    "HypothesisViolation",
    "LimitCovariance",
    "covariance_matrix",
    "sample_m_vector",
    "m_matrices",
    "build_M",
    "pth_roots",
    "LimitConstellation",
    "sample_constellation",
    "constellation_rows",
    "GinibreCaseLaw",
    "ginibre_case_law",
    "single_block_variance",
    "pairwise_outlier_covariance",
    "two_spike_closed_form",
    "gram_factors",
]

ComplexArray = NDArray[np.complex128]

_PSD_TOL = 1e-8
_JITTER = 1e-12
_SCHUR_COND = 1e12
_MAX_RESAMPLE = 16


class SpikeBelowRadiusError(ValueError):
    """A spike does not sit outside the outer radius."""


class SingularSchurBlock(ArithmeticError):
    """``M^I`` is numerically singular for this draw; redraw ``m``."""


class HypothesisViolation(ValueError):
    """The Gram products do not have the orthonormal (Kronecker) pattern."""


def gram_factors(basis: BasisSpec) -> tuple[ComplexArray, ComplexArray]:
    """``(Q^-1 (Q^-1)*, Q* Q)``."""
    qi = basis.inverse
    return qi @ qi.conj().T, basis.q.conj().T @ basis.q


@dataclass(frozen=True)
class LimitCovariance:
    """Covariance of the vector ``m`` indexed by ``(group, k, l)``.

    ``k`` runs over last columns ``J(theta_i)`` and ``l`` over first columns
    ``I(theta_i)``.  The pseudo-covariance ``E[m m^T]`` is identically zero.
    """

    index: tuple[tuple[int, int, int], ...]
    gamma: ComplexArray
    thetas: tuple[complex, ...]
    r: int
    factor: ComplexArray = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.index)


def _psd_factor(gamma: ComplexArray) -> ComplexArray:
    """``L`` with ``L L* = gamma`` by pivoted Cholesky (LAPACK ``pstrf``)."""
    g = 0.5 * (gamma + gamma.conj().T)
    d = g.shape[0]
    if d == 0:
        return np.zeros((0, 0), dtype=complex)
    scale = max(float(np.max(np.abs(np.diag(g)).real)), 1.0)
    w_min = float(np.linalg.eigvalsh(g)[0])
    if w_min < -_PSD_TOL * scale:
        raise np.linalg.LinAlgError(f"covariance is indefinite (min eigenvalue {w_min:.3e})")
    jittered = g + _JITTER * scale * np.eye(d)
    pstrf = sla.lapack.get_lapack_funcs("pstrf", (jittered,))
    c, piv, rank, info = pstrf(jittered, lower=1, tol=-1.0)
    if info < 0:
        raise np.linalg.LinAlgError(f"pstrf failed with info={info}")
    low = np.tril(c)
    low[:, rank:] = 0.0
    # P^T G P = L L*; undo the pivoting on the rows
    out = np.zeros_like(low)
    out[piv - 1, :] = low
    return out


def covariance_matrix(spec: JordanSpec, basis: BasisSpec, b: float) -> LimitCovariance:
    """Hermitian covariance ``Gamma`` of the Gaussian array ``m``.

    ``Gamma[(i,k,l),(i',k',l')] = b^2 / (theta_i conj(theta_i') - b^2)
    * G1[k, k'] * G2[l', l]`` with ``G1 = Q^-1 (Q^-1)*`` and ``G2 = Q* Q``.
    """
    if basis.r != spec.r:
        raise ValueError(f"basis dimension {basis.r} does not match spec dimension {spec.r}")
    for g in spec.groups:
        if not abs(g.theta) > b:
            raise SpikeBelowRadiusError(f"spike below outer radius: |{g.theta}| <= b={b}")
    idx = indexing(spec)
    g1, g2 = gram_factors(basis)
    index = tuple(
        (i, k, l)
        for i in range(len(spec.groups))
        for k in idx.J(i)
        for l in idx.I(i)
    )
    gi = np.array([t[0] for t in index], dtype=int)
    ks = np.array([t[1] for t in index], dtype=int)
    ls = np.array([t[2] for t in index], dtype=int)
    th = np.array(spec.thetas, dtype=complex)[gi]
    cauchy = b * b / (th[:, None] * th[None, :].conj() - b * b)
    gamma = cauchy * g1[np.ix_(ks, ks)] * g2[np.ix_(ls, ls)].T
    gamma = 0.5 * (gamma + gamma.conj().T)
    return LimitCovariance(
        index=index,
        gamma=gamma,
        thetas=tuple(spec.thetas),
        r=spec.r,
        factor=_psd_factor(gamma),
    )


def sample_m_vector(cov: LimitCovariance, rng: RNGLike, size: int | None = None) -> ComplexArray:
    """Circular complex Gaussian draw(s) with covariance ``cov.gamma``.

    Returns shape ``(dim,)`` or ``(size, dim)``.
    """
    gen = as_generator(rng)
    d = cov.dim
    shape = (d,) if size is None else (size, d)
    g = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / math.sqrt(2.0)
    return g @ cov.factor.T


def m_matrices(cov: LimitCovariance, m: ComplexArray) -> list[ComplexArray]:
    """Scatter a draw of ``m`` into one ``r x r`` array per group.

    Entries outside ``J(theta_i) x I(theta_i)`` are NaN.
    """
    out = [np.full((cov.r, cov.r), np.nan + 0j) for _ in cov.thetas]
    for val, (i, k, l) in zip(m, cov.index):
        out[i][k, l] = val
    return out


def build_M(group: int, cls: int, m: ComplexArray, idx: JordanIndexing, theta: complex) -> ComplexArray:
    """``theta * (M4 - M3 M1^-1 M2)`` for rate class ``cls`` of ``group``.

    ``m`` is the ``r x r`` array of that group (see :func:`m_matrices`).
    For the first class ``M1`` is empty and the result is ``theta * M4``.
    """
    k, km = list(idx.K(group, cls)), list(idx.K_minus(group, cls))
    l, lm = list(idx.L(group, cls)), list(idx.L_minus(group, cls))
    m4 = m[np.ix_(k, l)]
    if not km:
        return theta * m4
    m1 = m[np.ix_(km, lm)]
    m2 = m[np.ix_(km, l)]
    m3 = m[np.ix_(k, lm)]
    if np.linalg.cond(m1) > _SCHUR_COND:
        raise SingularSchurBlock("M^I is numerically singular")
    return theta * (m4 - m3 @ np.linalg.solve(m1, m2))


def pth_roots(values: Iterable[complex], p: int) -> ComplexArray:
    """All ``p``-th roots, principal root first, then rotations by ``2 pi s / p``."""
    rot = np.exp(2j * np.pi * np.arange(p) / p)
    out = []
    for v in values:
        base = cmath.exp(cmath.log(v) / p) if v != 0 else 0j
        out.extend(base * rot)
    return np.asarray(out, dtype=complex)


@dataclass(frozen=True)
class LimitConstellation:
    """Per ``(group, class)``: the matrix ``M`` and its root constellation."""

    matrices: dict[tuple[int, int], ComplexArray]
    points: dict[tuple[int, int], ComplexArray]
    block_sizes: dict[tuple[int, int], int]
    thetas: tuple[complex, ...]


def sample_constellation(
    spec: JordanSpec,
    basis: BasisSpec,
    b: float,
    rng: RNGLike,
    cov: LimitCovariance | None = None,
) -> LimitConstellation:
    """One joint draw of every ``M_j^theta_i`` from a single shared ``m``."""
    cov = cov if cov is not None else covariance_matrix(spec, basis, b)
    idx = indexing(spec)
    gen = as_generator(rng)
    for _ in range(_MAX_RESAMPLE):
        ms = m_matrices(cov, sample_m_vector(cov, gen))
        try:
            mats, pts, sizes = {}, {}, {}
            for i, g in enumerate(spec.groups):
                for j, (p, _) in enumerate(g.blocks):
                    mat = build_M(i, j, ms[i], idx, g.theta)
                    mats[(i, j)] = mat
                    pts[(i, j)] = pth_roots(np.linalg.eigvals(mat), p)
                    sizes[(i, j)] = p
        except SingularSchurBlock:
            continue
        return LimitConstellation(mats, pts, sizes, tuple(spec.thetas))
    raise SingularSchurBlock("M^I singular on every redraw; check Q")


def constellation_rows(c: LimitConstellation) -> list[tuple]:
    """Rows in the outlier CSV schema; ``lambda`` is ``theta`` plus the point."""
    rows = []
    for (i, j), pts in sorted(c.points.items()):
        th = c.thetas[i]
        for z in pts:
            lam = th + z
            rows.append((i, th.real, th.imag, j, c.block_sizes[(i, j)], lam.real, lam.imag, z.real, z.imag))
    return rows


def _ginibre(gen: np.random.Generator, rows: int, cols: int) -> ComplexArray:
    return (gen.standard_normal((rows, cols)) + 1j * gen.standard_normal((rows, cols))) / math.sqrt(2.0)


@dataclass(frozen=True)
class GinibreCaseLaw:
    """Law of the ``M`` matrices when the Gram products are orthonormal.

    ``M_1 ~ s * Ginibre(beta)``; for later classes
    ``M_j ~ s * (G1 - G2 G3^-1 G4)`` with independent Ginibre blocks of
    sizes ``beta x beta``, ``beta x rho``, ``rho x rho``, ``rho x beta``,
    ``rho`` being the number of blocks of earlier classes.  The scale is
    ``s = theta b / sqrt(|theta|^2 - b^2)``.
    """

    spec: JordanSpec
    b: float

    def scale(self, group: int) -> complex:
        th = self.spec.groups[group].theta
        return th * self.b / math.sqrt(abs(th) ** 2 - self.b**2)

    def sample(self, rng: RNGLike) -> dict[tuple[int, int], ComplexArray]:
        gen = as_generator(rng)
        out = {}
        for i, g in enumerate(self.spec.groups):
            s = self.scale(i)
            rho = 0
            for j, (_, beta) in enumerate(g.blocks):
                if j == 0:
                    out[(i, j)] = s * _ginibre(gen, beta, beta)
                else:
                    g1 = _ginibre(gen, beta, beta)
                    g2 = _ginibre(gen, beta, rho)
                    g3 = _ginibre(gen, rho, rho)
                    g4 = _ginibre(gen, rho, beta)
                    out[(i, j)] = s * (g1 - g2 @ np.linalg.solve(g3, g4))
                rho += beta
        return out

    def sample_constellation(self, rng: RNGLike) -> LimitConstellation:
        mats = self.sample(rng)
        pts, sizes = {}, {}
        for (i, j), mat in mats.items():
            p = self.spec.groups[i].blocks[j][0]
            pts[(i, j)] = pth_roots(np.linalg.eigvals(mat), p)
            sizes[(i, j)] = p
        return LimitConstellation(mats, pts, sizes, tuple(self.spec.thetas))


def ginibre_case_law(spec: JordanSpec, basis: BasisSpec, b: float, atol: float = 1e-10) -> GinibreCaseLaw:
    """Check the orthonormal Gram pattern and return the Ginibre-form law."""
    for g in spec.groups:
        if not abs(g.theta) > b:
            raise SpikeBelowRadiusError(f"spike below outer radius: |{g.theta}| <= b={b}")
    idx = indexing(spec)
    g1, g2 = gram_factors(basis)
    pairs = [(k, l) for i in range(len(spec.groups)) for k in idx.J(i) for l in idx.I(i)]
    ks = np.array([k for k, _ in pairs], dtype=int)
    ls = np.array([l for _, l in pairs], dtype=int)
    prod = g1[np.ix_(ks, ks)] * g2[np.ix_(ls, ls)].T
    if not np.allclose(prod, np.eye(len(pairs)), atol=atol, rtol=0):
        raise HypothesisViolation(
            "Gram products are not orthonormal; use sample_constellation for the general law"
        )
    return GinibreCaseLaw(spec=spec, b=b)


def single_block_variance(theta: complex, b: float) -> float:
    """Variance ``b^2 / (|theta|^2 (|theta|^2 - b^2))`` of the single-block law."""
    t2 = abs(theta) ** 2
    if not t2 > b * b:
        raise SpikeBelowRadiusError(f"need |theta| > b, got |{theta}| <= {b}")
    return b * b / (t2 * (t2 - b * b))


def pairwise_outlier_covariance(
    spec: JordanSpec,
    basis: BasisSpec,
    b: float,
    i: int,
    i_prime: int,
) -> tuple[float, float, complex]:
    """``(E|Z|^2, E|Z'|^2, E[Z conj(Z')])`` for two spikes of one block each.

    ``Z = sqrt(n) (lambda - theta)^p`` for the outliers of the two groups.
    Requires ``beta_{i,1} = beta_{i',1} = 1``.
    """
    if i == i_prime:
        raise ValueError("need two distinct groups")
    g, gp = spec.groups[i], spec.groups[i_prime]
    if g.blocks[0][1] != 1 or gp.blocks[0][1] != 1:
        raise ValueError("both groups need a single largest block (beta = 1)")
    for t in (g.theta, gp.theta):
        if not abs(t) > b:
            raise SpikeBelowRadiusError(f"spike below outer radius: |{t}| <= b={b}")
    idx = indexing(spec)
    k, l = idx.K(i, 0)[0], idx.L(i, 0)[0]
    kp, lp = idx.K(i_prime, 0)[0], idx.L(i_prime, 0)[0]
    g1, g2 = gram_factors(basis)
    t, tp = g.theta, gp.theta
    b2 = b * b
    sigma2 = abs(t) ** 2 * b2 / (abs(t) ** 2 - b2) * (g1[k, k] * g2[l, l]).real
    sigma2p = abs(tp) ** 2 * b2 / (abs(tp) ** 2 - b2) * (g1[kp, kp] * g2[lp, lp]).real
    kk = g1[k, kp] * g2[lp, l]
    w = t * tp.conjugate()
    cross = w * b2 * kk / (w - b2)
    return float(sigma2), float(sigma2p), complex(cross)


def two_spike_closed_form(theta: complex, theta_prime: complex, kappa: float) -> tuple[float, float, complex]:
    """Closed form for ``Po = Q diag(theta, theta') Q^-1``, ``Q = [[1, k], [k, 1]]``, ``b = 1``."""
    if abs(kappa) == 1.0:
        raise ValueError("kappa = +-1 makes Q singular")
    k2 = kappa * kappa
    lead = (1 + k2) ** 2 / (1 - k2) ** 2
    sigma2 = lead / (1 - abs(theta) ** -2)
    sigma2p = lead / (1 - abs(theta_prime) ** -2)
    cross = -4 * k2 / ((1 - 1 / (theta * theta_prime.conjugate())) * (1 - k2) ** 2)
    return sigma2, sigma2p, complex(cross)
