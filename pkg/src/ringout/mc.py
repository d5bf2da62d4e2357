"""Monte-Carlo campaigns over the spiked isotropic model.

Every trial draws all its randomness from ``SeededStream(base_seed,
trial_index)``, so results do not depend on how trials are scheduled.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from .jordan import BasisSpec, JordanSpec, embed_perturbation
from .limitlaw import gram_factors, pairwise_outlier_covariance, two_spike_closed_form
from .profiles import RingGeometry, SingularProfile, profile_from_json, realize, ring_radii
from .randmat import SeededStream, assemble_isotropic, sample_ginibre
from .spectra import (
    EigenSolverError,
    OutlierReport,
    classify_outliers,
    default_delta,
    default_epsilon,
    eigenvalues,
    match_outliers,
    write_report_csv,
)

__all__ = [
    "ExperimentError",
    "ExperimentConfig",
    "TrialResult",
    "SummaryStats",
    "run_trial",
    "run_trials",
    "run_experiment",
    "summarize",
    "ScalingResult",
    "ClassSlope",
    "scaling_study",
    "polygon_stats",
    "two_spike_config",
    "two_spike_comparison",
    "REFERENCE_PRINTED",
    "REFERENCE_EMPIRICAL",
    "write_trials_csv",
]

log = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]

MAX_FAILED_FRACTION = 0.10

# Values printed for the two-spike example (theta = 1.5+i, theta' = 3+i,
# Q = [[1, k], [k, 1]], Ginibre A, n = 1000, 1000 trials).  Kept for
# comparison only; the closed form is evaluated independently.
REFERENCE_PRINTED = {
    0.0: {"E|Z|^2": 1.444, "E|Z'|^2": 1.111, "E[Z conj Z']": 0j},
    2**-0.5: {"E|Z|^2": 13.0, "E|Z'|^2": 10.0, "E[Z conj Z']": complex(-8.755, -1.358)},
}
REFERENCE_EMPIRICAL = {
    0.0: {"E|Z|^2": 1.492, "E|Z'|^2": 1.107, "E[Z conj Z']": complex(0.00616, -0.00235)},
    2**-0.5: {"E|Z|^2": 12.72, "E|Z'|^2": 10.04, "E[Z conj Z']": complex(-8.917, -1.317)},
}


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte-Carlo experiment.  ``profile=None`` selects a Ginibre ``A``."""

    spec: JordanSpec
    n: int
    trials: int = 1
    base_seed: int = 0
    profile: SingularProfile | None = None
    basis: BasisSpec | None = None
    epsilon: float | None = None
    delta: float | None = None
    form: str = "UT"
    outputs: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n < self.spec.r:
            raise ValueError("n must be at least the perturbation dimension")
        if self.basis is None:
            object.__setattr__(self, "basis", BasisSpec.identity(self.spec.r))
        ring = self.ring
        eps = self.eps
        for th in self.spec.thetas:
            if ring.b < abs(th) <= ring.b + 3 * eps:
                raise ValueError(f"spike {th} lies in the band (b, b + 3 eps]; shrink epsilon")

    @property
    def ginibre(self) -> bool:
        return self.profile is None

    @property
    def ring(self) -> RingGeometry:
        return RingGeometry(0.0, 1.0) if self.profile is None else ring_radii(self.profile)

    @property
    def eps(self) -> float:
        return self.epsilon if self.epsilon is not None else default_epsilon(self.ring, self.spec.thetas)

    @property
    def dlt(self) -> float:
        if self.delta is not None:
            return self.delta
        return default_delta(self.ring) if self.ring.a > 0 else 0.0

    @property
    def multiplicity_one_groups(self) -> list[int]:
        b = self.ring.b
        return [
            i for i, g in enumerate(self.spec.groups)
            if len(g.blocks) == 1 and g.blocks[0][1] == 1 and abs(g.theta) > b
        ]

    @property
    def expected_outer(self) -> int:
        b = self.ring.b
        return sum(g.dim for g in self.spec.groups if abs(g.theta) > b)

    def to_json(self) -> dict[str, Any]:
        return {
            "profile": "ginibre" if self.profile is None else self.profile.to_json(),
            "spec": self.spec.to_json(),
            "q": self.basis.to_json(),
            "n": self.n,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "form": self.form,
            "outputs": dict(self.outputs),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ExperimentConfig":
        spec = JordanSpec.from_json(obj["spec"])
        prof = obj.get("profile", "ginibre")
        return cls(
            spec=spec,
            n=int(obj["n"]),
            trials=int(obj.get("trials", 1)),
            base_seed=int(obj.get("base_seed", 0)),
            profile=None if prof == "ginibre" else profile_from_json(prof),
            basis=BasisSpec.from_json(obj.get("q", "identity"), r=spec.r),
            epsilon=obj.get("epsilon"),
            delta=obj.get("delta"),
            form=obj.get("form", "UT"),
            outputs=dict(obj.get("outputs", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass
class TrialResult:
    trial_index: int
    report: OutlierReport | None
    z: dict[int, complex]
    n_outer: int = 0
    n_inner: int = 0
    failed: bool = False
    error: str = ""

    @property
    def usable(self) -> bool:
        return not self.failed and self.report is not None and not self.report.mismatch


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialResult:
    gen = SeededStream(config.base_seed, trial_index).generator()
    n = config.n
    if config.profile is None:
        a = sample_ginibre(n, gen)
    else:
        a = assemble_isotropic(realize(config.profile, n), gen, form=config.form)  # type: ignore[arg-type]
    pert = embed_perturbation(config.spec, config.basis, n, gen)  # type: ignore[arg-type]
    a += pert.P
    try:
        spectrum = eigenvalues(a)
    except EigenSolverError as exc:
        log.warning("trial %d: eigensolver failure: %s", trial_index, exc)
        return TrialResult(trial_index, None, {}, failed=True, error=str(exc))
    ring = config.ring
    cls = classify_outliers(spectrum, ring, config.eps, config.dlt)
    report = match_outliers(cls.outer, config.spec, n, min_modulus=ring.b,
                            inner_violations=cls.inner_violations)
    z: dict[int, complex] = {}
    if not report.mismatch:
        by_group = {c.group_index: c for c in report.clusters}
        for gi in config.multiplicity_one_groups:
            cl = by_group[gi]
            p = cl.block_sizes[0]
            z[gi] = complex(math.sqrt(n) * (cl.raw[0][0] - cl.theta) ** p)
    return TrialResult(
        trial_index, report, z,
        n_outer=len(cls.outer), n_inner=len(cls.inner_violations),
    )


def _run_chunk(args: tuple[ExperimentConfig, list[int]]) -> list[TrialResult]:
    config, idx = args
    return [run_trial(config, i) for i in idx]


def run_trials(config: ExperimentConfig, jobs: int = 1) -> list[TrialResult]:
    indices = list(range(config.trials))
    if jobs <= 1 or config.trials == 1:
        results = [run_trial(config, i) for i in indices]
    else:
        chunks = [(config, indices[k::jobs]) for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = [r for chunk in pool.map(_run_chunk, chunks) for r in chunk]
    return sorted(results, key=lambda r: r.trial_index)


@dataclass
class SummaryStats:
    trials: int
    failed: int
    excluded: int
    count_success_rate: float
    inner_violation_rate: float
    second_moments: dict[int, tuple[float, float]]
    cross_conj: dict[tuple[int, int], tuple[complex, float]]
    cross_plain: dict[tuple[int, int], tuple[complex, float]]
    theory: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        def se(x: float) -> float | None:
            return None if not math.isfinite(x) else x

        return {
            "trials": self.trials,
            "failed": self.failed,
            "excluded": self.excluded,
            "count_success_rate": self.count_success_rate,
            "inner_violation_rate": self.inner_violation_rate,
            "second_moments": [
                {"group": g, "mean": m, "se": se(s)} for g, (m, s) in sorted(self.second_moments.items())
            ],
            "cross_conj": [
                {"groups": list(k), "mean": [v.real, v.imag], "se": se(s)}
                for k, (v, s) in sorted(self.cross_conj.items())
            ],
            "cross_plain": [
                {"groups": list(k), "mean": [v.real, v.imag], "se": se(s)}
                for k, (v, s) in sorted(self.cross_plain.items())
            ],
            "theory": _jsonable(self.theory),
        }


def _jsonable(x: Any) -> Any:
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _mean_se(values: Sequence[complex] | NDArray) -> tuple[Any, float]:
    """Sample mean and its standard error (``nan`` below two samples)."""
    x = np.asarray(values)
    if x.size == 0:
        return math.nan, math.nan
    m = x.mean()
    if x.size < 2:
        return m, math.nan
    var = float(np.sum(np.abs(x - m) ** 2) / (x.size - 1))
    return m, math.sqrt(var / x.size)


def _theory(config: ExperimentConfig) -> dict[str, Any]:
    groups = config.multiplicity_one_groups
    b = config.ring.b
    g1, g2 = gram_factors(config.basis)  # type: ignore[arg-type]
    out: dict[str, Any] = {"second_moments": {}, "cross_conj": {}}
    for gi in groups:
        g = config.spec.groups[gi]
        start = sum(h.dim for h in config.spec.groups[:gi])
        k, l = start + g.blocks[0][0] - 1, start
        t2 = abs(g.theta) ** 2
        out["second_moments"][gi] = t2 * b * b / (t2 - b * b) * float((g1[k, k] * g2[l, l]).real)
    for x, gi in enumerate(groups):
        for gj in groups[x + 1 :]:
            _, _, cross = pairwise_outlier_covariance(config.spec, config.basis, b, gi, gj)  # type: ignore[arg-type]
            out["cross_conj"][f"{gi},{gj}"] = cross
    return out


def summarize(config: ExperimentConfig, results: Iterable[TrialResult]) -> SummaryStats:
    results = sorted(results, key=lambda r: r.trial_index)
    done = [r for r in results if not r.failed]
    usable = [r for r in done if r.usable]
    expected = config.expected_outer
    count_ok = sum(1 for r in done if r.n_outer == expected)
    inner_bad = sum(1 for r in done if r.n_inner > 0)
    groups = config.multiplicity_one_groups
    z = {g: np.array([r.z[g] for r in usable if g in r.z], dtype=complex) for g in groups}
    second = {g: tuple(map(float, _mean_se(np.abs(v) ** 2))) for g, v in z.items()}
    cross_conj, cross_plain = {}, {}
    for x, gi in enumerate(groups):
        for gj in groups[x + 1 :]:
            pair = [(r.z[gi], r.z[gj]) for r in usable if gi in r.z and gj in r.z]
            zi = np.array([p[0] for p in pair], dtype=complex)
            zj = np.array([p[1] for p in pair], dtype=complex)
            m, s = _mean_se(zi * zj.conj())
            cross_conj[(gi, gj)] = (complex(m), s)
            m, s = _mean_se(zi * zj)
            cross_plain[(gi, gj)] = (complex(m), s)
    nd = max(len(done), 1)
    return SummaryStats(
        trials=len(results),
        failed=len(results) - len(done),
        excluded=len(done) - len(usable),
        count_success_rate=count_ok / nd,
        inner_violation_rate=inner_bad / nd,
        second_moments=second,  # type: ignore[arg-type]
        cross_conj=cross_conj,
        cross_plain=cross_plain,
        theory=_theory(config) if groups else {},
    )


def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    results: list[TrialResult] | None = None,
) -> SummaryStats:
    """Run (or reuse) all trials and fold them into :class:`SummaryStats`."""
    results = run_trials(config, jobs=jobs) if results is None else results
    failed = sum(r.failed for r in results)
    if failed > MAX_FAILED_FRACTION * len(results):
        raise ExperimentError(f"{failed} of {len(results)} trials failed")
    return summarize(config, results)


def write_trials_csv(path: str | Path, results: Iterable[TrialResult]) -> None:
    rows = []
    for r in sorted(results, key=lambda r: r.trial_index):
        if r.report is None:
            continue
        rows.extend((r.trial_index,) + row for row in r.report.rows())
    write_report_csv(path, rows, leading=("trial",))


@dataclass
class ClassSlope:
    group: int
    rate_class: int
    p: int
    slope: float
    intercept: float
    stderr: float
    ci95: tuple[float, float]
    medians: list[float]

    @property
    def expected(self) -> float:
        return -1.0 / (2 * self.p)


@dataclass
class ScalingResult:
    n_list: list[int]
    slopes: list[ClassSlope]
    trials: dict[int, list[TrialResult]] = field(default_factory=dict, repr=False)

    def slope(self, group: int, rate_class: int) -> ClassSlope:
        return next(s for s in self.slopes if s.group == group and s.rate_class == rate_class)


def scaling_study(
    config: ExperimentConfig,
    n_list: Sequence[int],
    jobs: int = 1,
    keep_trials: bool = False,
    min_usable_fraction: float = 0.5,
) -> ScalingResult:
    """Regress ``log median |lambda - theta|`` on ``log n`` per rate class."""
    ns = sorted(set(int(n) for n in n_list))
    if len(ns) < 3:
        raise ValueError("need at least three distinct n values")
    b = config.ring.b
    classes = [
        (gi, j, p)
        for gi, g in enumerate(config.spec.groups) if abs(g.theta) > b
        for j, (p, _) in enumerate(g.blocks)
    ]
    dists: dict[tuple[int, int], list[float]] = {(gi, j): [] for gi, j, _ in classes}
    kept: dict[int, list[TrialResult]] = {}
    for n in ns:
        res = run_trials(replace(config, n=n), jobs=jobs)
        usable = [r for r in res if r.usable]
        if len(usable) < max(1, min_usable_fraction * len(res)):
            raise ExperimentError(f"only {len(usable)} usable trials of {len(res)} at n={n}")
        for gi, j, _ in classes:
            d = [
                abs(lam - c.theta)
                for r in usable for c in r.report.clusters if c.group_index == gi  # type: ignore[union-attr]
                for lam in c.raw[j]
            ]
            dists[(gi, j)].append(float(np.median(d)))
        if keep_trials:
            kept[n] = res
        log.info("scaling: n=%d done (%d usable)", n, len(usable))
    x = np.log(ns)
    out = []
    for gi, j, p in classes:
        y = np.log(dists[(gi, j)])
        fit = stats.linregress(x, y)
        tq = stats.t.ppf(0.975, len(ns) - 2)
        out.append(
            ClassSlope(gi, j, p, float(fit.slope), float(fit.intercept), float(fit.stderr),
                       (float(fit.slope - tq * fit.stderr), float(fit.slope + tq * fit.stderr)),
                       dists[(gi, j)])
        )
    return ScalingResult(ns, out, kept)


def polygon_stats(points: Sequence[complex] | ComplexArray, p: int, beta: int = 1) -> dict[str, float]:
    """Shape statistics of one rescaled cluster of ``p`` points.

    ``pth_power_spread``: max ``|z^p - med| / |med|`` with ``med`` the
    coordinatewise median of the ``z^p``; ``radial_spread``: range of
    ``|z|`` over its median; ``angular_deviation``: largest departure of
    the sorted angular gaps from ``2 pi / p``.
    """
    z = np.asarray(points, dtype=complex)
    if z.size != beta * p:
        raise ValueError(f"expected {beta * p} points, got {z.size}")
    if beta != 1:
        raise ValueError("polygon statistics are defined for a single block (beta = 1)")
    w = z**p
    med = complex(np.median(w.real), np.median(w.imag))
    spread = float(np.max(np.abs(w - med)) / abs(med)) if med != 0 else math.inf
    r = np.abs(z)
    radial = float((r.max() - r.min()) / np.median(r))
    ang = np.sort(np.mod(np.angle(z), 2 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    angular = float(np.max(np.abs(gaps - 2 * np.pi / p)))
    return {"radial_spread": radial, "angular_deviation": angular, "pth_power_spread": spread}


def two_spike_config(
    kappa: float,
    n: int,
    trials: int,
    base_seed: int = 0,
    theta: complex = 1.5 + 1j,
    theta_prime: complex = 3 + 1j,
) -> ExperimentConfig:
    """Ginibre ``A`` plus ``Po = Q diag(theta, theta') Q^-1`` with ``Q = [[1, k], [k, 1]]``."""
    q = np.array([[1.0, kappa], [kappa, 1.0]], dtype=complex)
    return ExperimentConfig(
        spec=JordanSpec.diagonal([theta, theta_prime]),
        n=n,
        trials=trials,
        base_seed=base_seed,
        profile=None,
        basis=BasisSpec(q),
    )


def two_spike_comparison(kappa: float, summary: SummaryStats,
                         theta: complex = 1.5 + 1j, theta_prime: complex = 3 + 1j) -> dict[str, Any]:
    """Theory (closed form), empirical and reference columns side by side.

    ``verdict`` names the cross-covariance candidate (closed form or printed
    reference) nearest to the empirical mean, with its distance in SE.
    """
    s2, s2p, cross = two_spike_closed_form(theta, theta_prime, kappa)
    (m0, se0), (m1, se1) = summary.second_moments[0], summary.second_moments[1]
    cm, cse = summary.cross_conj[(0, 1)]
    pm, pse = summary.cross_plain[(0, 1)]
    out: dict[str, Any] = {
        "kappa": kappa,
        "theoretical": {"E|Z|^2": s2, "E|Z'|^2": s2p, "E[Z conj Z']": cross, "E[Z Z']": 0j},
        "empirical": {"E|Z|^2": m0, "E|Z'|^2": m1, "E[Z conj Z']": cm, "E[Z Z']": pm},
        "standard_errors": {"E|Z|^2": se0, "E|Z'|^2": se1, "E[Z conj Z']": cse, "E[Z Z']": pse},
        "usable_trials": summary.trials - summary.failed - summary.excluded,
    }
    ref = _reference_for(kappa)
    if ref is not None:
        printed, emp = ref
        out["reference_printed"] = printed
        out["reference_empirical"] = emp
        cands = {"closed_form": cross, "printed": printed["E[Z conj Z']"]}
        dist = {k: abs(cm - v) / cse if cse > 0 else math.inf for k, v in cands.items()}
        best = min(dist, key=dist.get)  # type: ignore[arg-type]
        out["verdict"] = {"supported": best, "distance_se": dist, "value": cands[best]}
    return out


def _reference_for(kappa: float) -> tuple[dict, dict] | None:
    for k in REFERENCE_PRINTED:
        if math.isclose(k, kappa, rel_tol=0, abs_tol=1e-9):
            return REFERENCE_PRINTED[k], REFERENCE_EMPIRICAL[k]
    return None
