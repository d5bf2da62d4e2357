"""Dense spectra, the determinant ratio ``f(z)`` and outlier bookkeeping."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, NamedTuple

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray

from .jordan import JordanSpec
from .profiles import RingGeometry

__all__ = [
    "EigenSolverError",
    "SingularResolventError",
    "SpectrumResult",
    "eigenvalues",
    "characteristic_ratio",
    "polish_root",
    "Classification",
    "classify_outliers",
    "default_epsilon",
    "default_delta",
    "ClusterReport",
    "OutlierReport",
    "match_outliers",
    "REPORT_COLUMNS",
    "write_report_csv",
    "read_report_csv",
]

ComplexArray = NDArray[np.complex128]

_RESOLVENT_RCOND = 1e-14


class EigenSolverError(RuntimeError):
    """Raised when the QR iteration fails; carries what was computed."""

    def __init__(self, message: str, partial: ComplexArray | None = None) -> None:
        super().__init__(message)
        self.partial = partial


class SingularResolventError(ValueError):
    """``zI - A`` is singular or too ill-conditioned to solve against."""


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: ComplexArray
    trace_residual: float
    det_residual: float | None = None


def eigenvalues(m: ComplexArray, check: bool = True) -> SpectrumResult:
    """All eigenvalues of a dense square matrix.

    Uses LAPACK ``geev`` (balancing, Householder Hessenberg reduction and
    shifted QR to Schur form).  ``trace_residual`` is
    ``|sum(lambda) - Tr M| / (n * max|M_ij|)``; for ``n <= 30`` the relative
    determinant residual is reported too.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    n = m.shape[0]
    try:
        lam = sla.eigvals(m, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"QR iteration did not converge: {exc}") from exc
    lam = np.asarray(lam, dtype=complex)
    scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny) if n else 1.0
    trace_res = abs(lam.sum() - np.trace(m)) / (n * scale)
    det_res = None
    if n <= 30:
        det = np.linalg.det(m)
        prod = np.prod(lam)
        det_res = abs(prod - det) / max(abs(det), np.finfo(float).tiny)
        if abs(det) < 1e-300:
            det_res = abs(prod - det)
    if check and trace_res > 1e-8:
        raise EigenSolverError(f"trace residual {trace_res:.3e} too large", partial=lam)
    return SpectrumResult(eigenvalues=lam, trace_residual=float(trace_res), det_residual=det_res)


def characteristic_ratio(z: complex, a: ComplexArray, b: ComplexArray, c: ComplexArray) -> complex:
    """``det(I_r - C (zI - A)^-1 B)``, i.e. ``det(zI - A - BC) / det(zI - A)``.

    One LU factorization of ``zI - A`` and ``r`` triangular solves; the
    ``n x n`` inverse is never formed.
    """
    a = np.asarray(a)
    n = a.shape[0]
    b = np.asarray(b).reshape(n, -1)
    c = np.asarray(c).reshape(-1, n)
    r = b.shape[1]
    shifted = -a.astype(complex, copy=True)
    shifted[np.diag_indices(n)] += z
    anorm = np.linalg.norm(shifted, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(shifted, check_finite=False)
    if np.any(np.diag(lu) == 0):
        raise SingularResolventError(f"z={z} is an eigenvalue of A")
    getrf_cond = sla.lapack.get_lapack_funcs("gecon", (lu,))
    rcond, info = getrf_cond(lu, anorm, norm="1")
    if info != 0 or rcond < _RESOLVENT_RCOND:
        raise SingularResolventError(f"zI - A is nearly singular at z={z} (rcond={rcond:.2e})")
    x = sla.lu_solve((lu, piv), b.astype(complex), check_finite=False)
    return complex(np.linalg.det(np.eye(r) - c @ x))


def polish_root(
    z: complex,
    a: ComplexArray,
    b: ComplexArray,
    c: ComplexArray,
    steps: int = 1,
) -> complex:
    """Newton steps on ``f`` with a central-difference derivative."""
    for _ in range(steps):
        h = 1e-6 * max(1.0, abs(z))
        try:
            fz = characteristic_ratio(z, a, b, c)
            df = (characteristic_ratio(z + h, a, b, c) - characteristic_ratio(z - h, a, b, c)) / (2 * h)
        except SingularResolventError:
            break
        if fz == 0 or df == 0:
            break
        z = z - fz / df
    return z


class Classification(NamedTuple):
    outer: ComplexArray
    inner_violations: ComplexArray
    bulk: ComplexArray


def default_epsilon(ring: RingGeometry, thetas: Iterable[complex]) -> float:
    """``min(0.1 b, (min |theta| - b) / 4)`` over spikes beyond ``b``."""
    b = ring.b
    beyond = [abs(t) for t in thetas if abs(t) > b]
    eps = 0.1 * b
    if beyond:
        eps = min(eps, (min(beyond) - b) / 4.0)
    return eps


def default_delta(ring: RingGeometry) -> float:
    return 0.1 * ring.a


def classify_outliers(
    spectrum: SpectrumResult | ComplexArray,
    ring: RingGeometry,
    epsilon: float,
    delta: float,
) -> Classification:
    """Split eigenvalues into ``|z| > b + 2 eps``, ``|z| < a - delta`` and the rest."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if ring.a > 0 and not (0 < delta < ring.a):
        raise ValueError("delta must lie in (0, a)")
    lam = spectrum.eigenvalues if isinstance(spectrum, SpectrumResult) else np.asarray(spectrum, dtype=complex)
    mod = np.abs(lam)
    outer = mod > ring.b + 2 * epsilon
    if ring.a > 0:
        inner = mod < ring.a - delta
    else:
        inner = np.zeros_like(outer)
    return Classification(outer=lam[outer], inner_violations=lam[inner], bulk=lam[~outer & ~inner])


@dataclass
class ClusterReport:
    """Outliers attached to one spiked eigenvalue, split by rate class."""

    group_index: int
    theta: complex
    block_sizes: tuple[int, ...]
    expected_counts: tuple[int, ...]
    raw: list[ComplexArray]
    rescaled: list[ComplexArray]
    mismatch: bool

    @property
    def count(self) -> int:
        return int(sum(len(x) for x in self.raw))


@dataclass
class OutlierReport:
    n: int
    clusters: list[ClusterReport]
    unmatched: ComplexArray = field(default_factory=lambda: np.empty(0, dtype=complex))
    inner_violations: ComplexArray = field(default_factory=lambda: np.empty(0, dtype=complex))

    @property
    def mismatch(self) -> bool:
        return any(c.mismatch for c in self.clusters) or self.unmatched.size > 0

    def rows(self) -> list[tuple]:
        out = []
        for cl in self.clusters:
            for j, (raw, resc) in enumerate(zip(cl.raw, cl.rescaled)):
                for lam, lr in zip(raw, resc):
                    out.append(
                        (cl.group_index, cl.theta.real, cl.theta.imag, j, cl.block_sizes[j],
                         lam.real, lam.imag, lr.real, lr.imag)
                    )
        return out


def match_outliers(
    outer: Iterable[complex],
    spec: JordanSpec,
    n: int,
    min_modulus: float = 0.0,
    inner_violations: ComplexArray | None = None,
) -> OutlierReport:
    """Attach outer eigenvalues to spikes and rescale them.

    Each point goes to the nearest ``theta_i`` among groups with
    ``|theta_i| > min_modulus``.  Inside a cluster points are sorted by
    distance to ``theta_i`` (farthest first) and dealt out to the rate
    classes in order, ``beta * p`` points per class; each class is rescaled
    by ``n ** (1 / (2 p))``.  Count mismatches are flagged, never raised.
    """
    pts = np.asarray(list(outer), dtype=complex)
    eligible = [i for i, g in enumerate(spec.groups) if abs(g.theta) > min_modulus]
    clusters: list[ClusterReport] = []
    if not eligible:
        return OutlierReport(n=n, clusters=[], unmatched=pts,
                             inner_violations=_as_complex(inner_violations))
    thetas = np.array([spec.groups[i].theta for i in eligible])
    owner = np.argmin(np.abs(pts[:, None] - thetas[None, :]), axis=1) if pts.size else np.empty(0, int)
    unmatched: list[complex] = []
    for slot, gi in enumerate(eligible):
        g = spec.groups[gi]
        mine = pts[owner == slot]
        mine = mine[np.argsort(-np.abs(mine - g.theta), kind="stable")]
        expected = tuple(p * beta for p, beta in g.blocks)
        raw, resc = [], []
        pos = 0
        for (p, _), cnt in zip(g.blocks, expected):
            chunk = mine[pos : pos + cnt]
            pos += len(chunk)
            raw.append(chunk)
            resc.append(n ** (1.0 / (2 * p)) * (chunk - g.theta))
        unmatched.extend(mine[pos:])
        clusters.append(
            ClusterReport(
                group_index=gi,
                theta=g.theta,
                block_sizes=tuple(p for p, _ in g.blocks),
                expected_counts=expected,
                raw=raw,
                rescaled=resc,
                mismatch=len(mine) != sum(expected),
            )
        )
    return OutlierReport(
        n=n,
        clusters=clusters,
        unmatched=np.asarray(unmatched, dtype=complex),
        inner_violations=_as_complex(inner_violations),
    )


def _as_complex(x: ComplexArray | None) -> ComplexArray:
    return np.empty(0, dtype=complex) if x is None else np.asarray(x, dtype=complex)


REPORT_COLUMNS = (
    "group_index",
    "theta_re",
    "theta_im",
    "rate_class",
    "p",
    "lambda_re",
    "lambda_im",
    "rescaled_re",
    "rescaled_im",
)


def write_report_csv(
    dest: str | Path | IO[str],
    rows: Iterable[tuple],
    leading: tuple[str, ...] = (),
) -> None:
    """Write rows in the report schema; ``leading`` names extra first columns."""
    own = not hasattr(dest, "write")
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(leading + REPORT_COLUMNS)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    finally:
        if own:
            fh.close()


def read_report_csv(path: str | Path) -> list[dict[str, float | int]]:
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row: dict[str, float | int] = {}
            for k, v in rec.items():
                row[k] = int(v) if k in ("group_index", "rate_class", "p", "trial") else float(v)
            out.append(row)
    return out


def _fmt(x: object) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    xf = float(x)  # type: ignore[arg-type]
    return repr(xf) if math.isfinite(xf) else "nan"
