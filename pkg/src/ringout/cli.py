"""Command-line front end: ``ringout <command> [flags]``.

Exit codes: 0 on success, 1 on usage errors, 2 on numerical or experiment
failures.  Every command is deterministic given ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import mc
from .jordan import BasisSpec, JordanSpec, embed_perturbation
from .limitlaw import (
    HypothesisViolation,
    SingularSchurBlock,
    SpikeBelowRadiusError,
    constellation_rows,
    covariance_matrix,
    sample_constellation,
)
from .profiles import RingGeometry, parse_profile, profile_from_json, realize, ring_radii
from .randmat import SeededStream, assemble_isotropic, sample_ginibre
from .spectra import (
    EigenSolverError,
    classify_outliers,
    eigenvalues,
    match_outliers,
    write_report_csv,
)
from .svg import write_scatter_svg
from .weingarten import weingarten_table

__all__ = ["main", "build_parser", "UsageError"]

log = logging.getLogger("ringout")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _finite(x: Any) -> Any:
    """Replace non-finite floats by ``None`` so the JSON stays strict."""
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, complex):
        return [_finite(x.real), _finite(x.imag)]
    if isinstance(x, dict):
        return {str(k): _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return _finite(x.item())
    return x


def _load_json_arg(text: str) -> Any:
    text = text.strip()
    if text[:1] in "{[\"":
        return json.loads(text)
    return json.loads(Path(text).read_text())


def _profile_arg(text: str | None):
    if text is None or text == "ginibre":
        return None
    if text.lstrip()[:1] == "{" or text.endswith(".json"):
        return profile_from_json(_load_json_arg(text))
    return parse_profile(text)


def _spec_arg(text: str) -> JordanSpec:
    return JordanSpec.from_json(_load_json_arg(text))


def _basis_arg(text: str | None, r: int) -> BasisSpec:
    if text is None or text == "identity":
        return BasisSpec.identity(r)
    return BasisSpec.from_json(_load_json_arg(text), r=r)


def _out_dir(args: argparse.Namespace) -> Path | None:
    if args.out_dir is None:
        return None
    p = Path(args.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _jobs(args: argparse.Namespace) -> int:
    env = os.environ.get("RING_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"RING_JOBS must be an integer, got {env!r}") from exc
    return max(1, args.jobs)


def _ring_of(profile) -> RingGeometry:
    return RingGeometry(0.0, 1.0) if profile is None else ring_radii(profile)


def _config_from_flags(args: argparse.Namespace) -> mc.ExperimentConfig:
    if args.spec is None:
        raise UsageError("--spec is required")
    if args.n is None:
        raise UsageError("--n is required")
    spec = _spec_arg(args.spec)
    return mc.ExperimentConfig(
        spec=spec,
        n=args.n,
        trials=args.trials or 1,
        base_seed=args.seed,
        profile=_profile_arg(args.profile),
        basis=_basis_arg(args.q, spec.r),
        epsilon=args.epsilon,
        delta=args.delta,
    )


# -- commands ---------------------------------------------------------------


def cmd_ring(args: argparse.Namespace) -> int:
    profile = _profile_arg(args.profile)
    ring = _ring_of(profile)
    print(f"a = {ring.a:.5f}")
    print(f"b = {ring.b:.5f}")
    out = _out_dir(args)
    if out is not None:
        doc = {"profile": "ginibre" if profile is None else profile.to_json(), "a": ring.a, "b": ring.b}
        (out / "ring.json").write_text(_dump(doc))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _config_from_flags(args)
    gen = SeededStream(args.seed, 0).generator()
    if cfg.profile is None:
        a = sample_ginibre(cfg.n, gen)
    else:
        a = assemble_isotropic(realize(cfg.profile, cfg.n), gen, form=cfg.form)  # type: ignore[arg-type]
    a += embed_perturbation(cfg.spec, cfg.basis, cfg.n, gen).P  # type: ignore[arg-type]
    spectrum = eigenvalues(a)
    ring = cfg.ring
    cls = classify_outliers(spectrum, ring, cfg.eps, cfg.dlt)
    report = match_outliers(cls.outer, cfg.spec, cfg.n, min_modulus=ring.b,
                            inner_violations=cls.inner_violations)
    print(f"outer outliers: {cls.outer.size} (expected {cfg.expected_outer})")
    print(f"inner violations: {cls.inner_violations.size}")
    print(f"mismatch: {report.mismatch}")
    for row in report.rows():
        print(f"  group {row[0]} class {row[3]}: lambda = {complex(row[5], row[6]):.6f}")
    out = _out_dir(args)
    if out is not None:
        lam = spectrum.eigenvalues[np.lexsort((spectrum.eigenvalues.imag, spectrum.eigenvalues.real))]
        with open(out / "spectrum.csv", "w", newline="") as fh:
            fh.write("re,im\n")
            for z in lam:
                fh.write(f"{z.real!r},{z.imag!r}\n")
        write_report_csv(out / "report.csv", report.rows())
        if args.svg:
            circles = [ring.b] + ([ring.a] if ring.a > 0 else [])
            write_scatter_svg(out / "spectrum.svg", lam, cfg.spec.thetas, circles)
    return 0


def cmd_limit_sample(args: argparse.Namespace) -> int:
    if args.spec is None:
        raise UsageError("--spec is required")
    spec = _spec_arg(args.spec)
    basis = _basis_arg(args.q, spec.r)
    profile = _profile_arg(args.profile)
    b = args.b if args.b is not None else _ring_of(profile).b
    cov = covariance_matrix(spec, basis, b)
    stream = SeededStream(args.seed, 0)
    draws = args.trials or 1
    rows = []
    for d in range(draws):
        c = sample_constellation(spec, basis, b, stream.child(d), cov=cov)
        rows.extend((d,) + row for row in constellation_rows(c))
    print(f"{draws} constellation draw(s), {len(rows)} points, b = {b:.6g}")
    out = _out_dir(args)
    if out is not None:
        write_report_csv(out / "constellation.csv", rows, leading=("draw",))
        if args.svg:
            pts = [complex(r[8], r[9]) for r in rows]
            write_scatter_svg(out / "constellation.svg", pts, [0j])
    else:
        for r in rows[: min(len(rows), 20)]:
            print(f"  draw {r[0]} group {r[1]} class {r[4]}: {complex(r[8], r[9]):.6f}")
    return 0


def _experiment_outputs(cfg: mc.ExperimentConfig, results: list[mc.TrialResult],
                        stats: mc.SummaryStats, out: Path | None, svg: bool,
                        extra: dict[str, Any] | None = None) -> None:
    doc = {"config": cfg.to_json(), "stats": stats.to_json()}
    if extra:
        doc.update(extra)
    text = _dump(_finite(doc))
    if out is None:
        sys.stdout.write(text)
        return
    (out / "summary.json").write_text(text)
    mc.write_trials_csv(out / "trials.csv", results)
    if svg:
        pts = [
            lam for r in results if r.report is not None
            for c in r.report.clusters for cls in c.raw for lam in cls
        ]
        write_scatter_svg(out / "outliers.svg", pts, cfg.spec.thetas, [cfg.ring.b])
    print(f"wrote {out / 'summary.json'}")


def cmd_experiment(args: argparse.Namespace) -> int:
    if args.config is not None:
        cfg = mc.ExperimentConfig.load(args.config)
        overrides: dict[str, Any] = {}
        if args.n is not None:
            overrides["n"] = args.n
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.seed_given:
            overrides["base_seed"] = args.seed
        if overrides:
            cfg = replace(cfg, **overrides)
    else:
        cfg = _config_from_flags(args)
    results = mc.run_trials(cfg, jobs=_jobs(args))
    stats = mc.run_experiment(cfg, results=results)
    out = _out_dir(args)
    if out is None and cfg.outputs.get("dir"):
        out = Path(cfg.outputs["dir"])
        out.mkdir(parents=True, exist_ok=True)
    _experiment_outputs(cfg, results, stats, out, args.svg)
    return 0


def cmd_scaling(args: argparse.Namespace) -> int:
    try:
        ns = [int(x) for x in args.n_list.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--n-list must be comma-separated integers, got {args.n_list!r}") from exc
    if not args.config and args.n is None and ns:
        args.n = ns[0]
    cfg = mc.ExperimentConfig.load(args.config) if args.config else _config_from_flags(args)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.config and args.seed_given:
        cfg = replace(cfg, base_seed=args.seed)
    res = mc.scaling_study(cfg, ns, jobs=_jobs(args))
    rows = []
    for s in res.slopes:
        print(f"group {s.group} class {s.rate_class} (p={s.p}): slope {s.slope:+.4f} "
              f"[{s.ci95[0]:+.4f}, {s.ci95[1]:+.4f}], expected {s.expected:+.4f}")
        rows.append({
            "group": s.group, "rate_class": s.rate_class, "p": s.p, "slope": s.slope,
            "intercept": s.intercept, "stderr": s.stderr, "ci95": list(s.ci95),
            "expected": s.expected, "medians": s.medians,
        })
    out = _out_dir(args)
    if out is not None:
        doc = {"config": cfg.to_json(), "n_list": res.n_list, "classes": rows}
        (out / "scaling.json").write_text(_dump(_finite(doc)))
    return 0


def cmd_weingarten(args: argparse.Namespace) -> int:
    table = weingarten_table(args.k, args.n)
    for shape, val in table.values.items():
        print(f"{list(shape)}\t{val}")
    out = _out_dir(args)
    if out is not None:
        (out / "weingarten.json").write_text(_dump(table.to_json()))
    return 0


def cmd_table1(args: argparse.Namespace) -> int:
    n = args.n or 500
    trials = args.trials or 200
    cfg = mc.two_spike_config(args.kappa, n, trials, base_seed=args.seed)
    results = mc.run_trials(cfg, jobs=_jobs(args))
    stats = mc.run_experiment(cfg, results=results)
    comp = mc.two_spike_comparison(args.kappa, stats)
    comp.update({"n": n, "trials": trials, "seed": args.seed})
    text = _dump(_finite(comp))
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(text)
    else:
        (out / "table1.json").write_text(text)
        mc.write_trials_csv(out / "trials.csv", results)
        if args.svg:
            pts = [r.z[0] for r in results if 0 in r.z]
            write_scatter_svg(out / "z.svg", pts, [0j])
        print(f"wrote {out / 'table1.json'}")
    return 0


# -- parser -----------------------------------------------------------------


class _SeedAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):  # type: ignore[no-untyped-def]
        setattr(namespace, self.dest, values)
        namespace.seed_given = True


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, action=_SeedAction, help="base seed (default 0)")
    p.add_argument("--out-dir", help="directory for emitted files")
    p.add_argument("--svg", action="store_true", help="also write an SVG scatter")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (RING_JOBS overrides)")
    p.set_defaults(seed_given=False)


def _model_flags(p: argparse.ArgumentParser, spec_required: bool = False) -> None:
    p.add_argument("--profile", help="kind:params (e.g. uniform:0.5,4), a JSON object/file, or 'ginibre'")
    p.add_argument("--spec", required=spec_required, help="Jordan spec as JSON text or file")
    p.add_argument("--q", help="basis Q as JSON text/file, or 'identity'")
    p.add_argument("--n", type=int, help="matrix dimension")
    p.add_argument("--trials", type=int, help="number of trials / draws")
    p.add_argument("--epsilon", type=float, help="outer margin (default min(0.1 b, gap/4))")
    p.add_argument("--delta", type=float, help="inner margin (default 0.1 a)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ringout", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ring", help="print ring radii a, b for a profile")
    p.add_argument("--profile", required=True)
    _common(p)
    p.set_defaults(func=cmd_ring)

    p = sub.add_parser("simulate", help="one trial: spectrum and outlier report")
    _model_flags(p, spec_required=True)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limit-sample", help="draw limiting outlier constellations")
    _model_flags(p, spec_required=True)
    p.add_argument("--b", type=float, help="outer radius (default from --profile, 1 for Ginibre)")
    _common(p)
    p.set_defaults(func=cmd_limit_sample)

    p = sub.add_parser("experiment", help="run a Monte-Carlo experiment")
    p.add_argument("--config", help="experiment config JSON file")
    _model_flags(p)
    _common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("scaling", help="convergence-rate regression over n")
    p.add_argument("--config", help="experiment config JSON file")
    p.add_argument("--n-list", required=True, help="comma-separated dimensions, e.g. 250,500,1000")
    _model_flags(p)
    _common(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("weingarten", help="print the exact Weingarten table")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_weingarten)

    p = sub.add_parser("table1", help="two-spike correlation experiment (Ginibre A)")
    p.add_argument("--kappa", type=float, default=2**-0.5)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    _common(p)
    p.set_defaults(func=cmd_table1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        if isinstance(exc, (SpikeBelowRadiusError, HypothesisViolation)):
            print(f"ringout: {exc}", file=sys.stderr)
            return 2
        print(f"ringout: error: {exc}", file=sys.stderr)
        return 1
    except (mc.ExperimentError, EigenSolverError, SingularSchurBlock, np.linalg.LinAlgError,
            ArithmeticError) as exc:
        print(f"ringout: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
