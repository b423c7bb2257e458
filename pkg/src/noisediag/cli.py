"""Command-line front end.

Subcommands: ``synth`` (generate a synthetic dataset), ``geometry`` and
``spectral`` (diagnostics over a dataset manifest), ``paired-test``
(prompt-level paired bootstrap + permutation analysis of a score table),
and ``all`` (synth followed by the full pipeline, with the paired test run
on sp_hf of z vs z_g).

Exit codes: 0 success; 1 validation error (bad files, bad config values);
2 degenerate data (a statistic is undefined on the inputs); 64 usage error
(unknown flags, malformed invocations); 70 internal error.

Reports are append-only: inputs are never mutated, outputs are written once
after a deterministic reduce, and re-running an identical configuration
reproduces every JSON byte.  The default output directory is
``./noisediag-out`` unless the NOISEDIAG_OUT environment variable overrides
it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, paired, report, synth
from .dataio import group_by_prompt, load_manifest, load_scores, write_scores
from .errors import DegenerateInputError, NoiseDiagError
from .geometry import aggregate_geometry
from .spectral import DEFAULT_RHO, DEFAULT_RHO_T, TARGETS, spectral_report

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DEGENERATE = 2
EXIT_USAGE = 64
EXIT_INTERNAL = 70

FORMATS = ("json", "md", "csv")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; route them to the documented code.
    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunConfig:
    """Resolved knobs for one invocation; echoed verbatim into reports."""

    command: str
    out_dir: Path
    formats: tuple[str, ...] = FORMATS
    manifest: Path | None = None
    scores: Path | None = None
    baseline_scores: Path | None = None
    treatment_scores: Path | None = None
    spec: Path | None = None
    metric: str | None = None
    baseline: str = "baseline"
    treatment: str = "treatment"
    rho: float = DEFAULT_RHO
    rho_t: float = DEFAULT_RHO_T
    targets: tuple[str, ...] = TARGETS
    prompt_averaged: bool = False
    n_bootstrap: int = 10000
    n_permutations: int = 100000
    ci_level: float = 0.95
    sided: str = "two-sided"
    method: str = "auto"
    rng_seed: int = 0
    jobs: int = 1

    def validate(self) -> None:
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"--rho must lie in (0, 1], got {self.rho}")
        if not 0.0 < self.rho_t <= 1.0:
            raise ValueError(f"--rho-t must lie in (0, 1], got {self.rho_t}")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError(f"--ci-level must lie in (0, 1), got {self.ci_level}")
        if self.jobs < 1:
            raise ValueError(f"--jobs must be >= 1, got {self.jobs}")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValueError(f"unknown output formats {bad}; choose from {FORMATS}")

    def echo(self) -> dict:
        out: dict = {"command": self.command, "out_dir": str(self.out_dir)}
        for key, value in (
            ("manifest", self.manifest),
            ("scores", self.scores),
            ("baseline_scores", self.baseline_scores),
            ("treatment_scores", self.treatment_scores),
            ("spec", self.spec),
        ):
            if value is not None:
                out[key] = str(value)
        if self.command in ("spectral", "all"):
            out.update(
                rho=self.rho,
                rho_t=self.rho_t,
                targets=list(self.targets),
                prompt_averaged=self.prompt_averaged,
            )
        if self.command in ("paired-test", "all"):
            out.update(
                metric=self.metric,
                baseline=self.baseline,
                treatment=self.treatment,
                n_bootstrap=self.n_bootstrap,
                n_permutations=self.n_permutations,
                ci_level=self.ci_level,
                sided=self.sided,
                method=self.method,
            )
        out["rng_seed"] = self.rng_seed
        out["jobs"] = self.jobs
        out["formats"] = list(self.formats)
        return out


def _default_out() -> str:
    return os.environ.get("NOISEDIAG_OUT", "noisediag-out")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=_default_out(), help="output directory")
    p.add_argument(
        "--formats",
        default="json,md,csv",
        help="comma-separated subset of json,md,csv",
    )
    p.add_argument("--jobs", type=int, default=1, help="parallel prompt workers")


def _add_stat_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-bootstrap", type=int, default=10000)
    p.add_argument("--n-permutations", type=int, default=100000)
    p.add_argument("--ci-level", type=float, default=0.95)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--sided", choices=paired.SIDES, default="two-sided")
    p.add_argument("--method", choices=("auto", "exact", "monte_carlo"), default="auto")


def build_parser() -> _Parser:
    parser = _Parser(prog="noisediag", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"noisediag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_synth = sub.add_parser("synth", help="generate a synthetic (z, z_g) dataset")
    p_synth.add_argument("--spec", required=True, help="regime spec JSON (see FORMATS.md)")
    p_synth.add_argument("--out", default=_default_out())

    p_geo = sub.add_parser("geometry", help="geometry/directional diagnostics")
    p_geo.add_argument("--manifest", required=True)
    _add_common(p_geo)

    p_spec = sub.add_parser("spectral", help="spatial/temporal frequency diagnostics")
    p_spec.add_argument("--manifest", required=True)
    p_spec.add_argument("--rho", type=float, default=DEFAULT_RHO)
    p_spec.add_argument("--rho-t", type=float, default=DEFAULT_RHO_T)
    p_spec.add_argument("--targets", default="z,zg,d", help="comma-separated subset of z,zg,d")
    p_spec.add_argument(
        "--prompt-averaged",
        action="store_true",
        help="summarize seed-averaged prompt values instead of raw records",
    )
    _add_common(p_spec)

    p_pair = sub.add_parser("paired-test", help="prompt-level paired significance test")
    p_pair.add_argument("--scores", help="one CSV with an arm column")
    p_pair.add_argument("--baseline-scores", help="CSV for the baseline arm")
    p_pair.add_argument("--treatment-scores", help="CSV for the treatment arm")
    p_pair.add_argument("--metric", required=True)
    p_pair.add_argument("--baseline", default="baseline", help="baseline arm label")
    p_pair.add_argument("--treatment", default="treatment", help="treatment arm label")
    _add_stat_flags(p_pair)
    p_pair.add_argument("--out", default=_default_out())
    p_pair.add_argument("--formats", default="json,md,csv")
    p_pair.add_argument("--jobs", type=int, default=1)

    p_all = sub.add_parser("all", help="synth + geometry + spectral + paired test")
    p_all.add_argument("--spec", required=True)
    p_all.add_argument("--rho", type=float, default=DEFAULT_RHO)
    p_all.add_argument("--rho-t", type=float, default=DEFAULT_RHO_T)
    _add_stat_flags(p_all)
    _add_common(p_all)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, out_dir=Path(args.out))
    cfg.formats = tuple(f.strip() for f in getattr(args, "formats", "json,md,csv").split(",") if f.strip())
    for attr, name in (
        ("manifest", "manifest"),
        ("scores", "scores"),
        ("baseline_scores", "baseline_scores"),
        ("treatment_scores", "treatment_scores"),
        ("spec", "spec"),
    ):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, attr, Path(value))
    for name in (
        "metric",
        "baseline",
        "treatment",
        "rho",
        "rho_t",
        "prompt_averaged",
        "n_bootstrap",
        "n_permutations",
        "ci_level",
        "sided",
        "method",
        "rng_seed",
        "jobs",
    ):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "targets"):
        cfg.targets = tuple(t.strip() for t in args.targets.split(",") if t.strip())
    cfg.validate()
    return cfg


def _write_outputs(cfg: RunConfig, name: str, payload: dict, markdown: str) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in cfg.formats:
        report.write_json(cfg.out_dir / f"{name}.json", payload)
    if "md" in cfg.formats:
        (cfg.out_dir / f"{name}.md").write_text(markdown, encoding="utf-8")


def _cmd_synth(cfg: RunConfig) -> int:
    spec = synth.RegimeSpec.from_json_file(cfg.spec)
    manifest = synth.generate_dataset(spec, cfg.out_dir)
    print(f"wrote {len(manifest.entries)} records to {cfg.out_dir}")
    return EXIT_OK


def _run_geometry(cfg: RunConfig, manifest_path: Path, out_prefix: str = "geometry") -> None:
    manifest = load_manifest(manifest_path)
    groups = group_by_prompt(manifest)
    rep = aggregate_geometry(groups, jobs=cfg.jobs)
    inputs = report.dataset_digests(manifest_path, manifest)
    payload = report.geometry_payload(rep, cfg.echo(), inputs)
    markdown = report.geometry_markdown(rep, cfg.echo(), inputs)
    _write_outputs(cfg, out_prefix, payload, markdown)
    if "csv" in cfg.formats:
        record_rows, prompt_rows = report.geometry_score_rows(rep)
        write_scores(cfg.out_dir / f"{out_prefix}_records.csv", record_rows)
        write_scores(cfg.out_dir / f"{out_prefix}_prompts.csv", prompt_rows)


def _cmd_geometry(cfg: RunConfig) -> int:
    _run_geometry(cfg, cfg.manifest)
    print(f"geometry report written to {cfg.out_dir}")
    return EXIT_OK


def _run_spectral(cfg: RunConfig, manifest_path: Path, out_prefix: str = "spectral"):
    manifest = load_manifest(manifest_path)
    groups = group_by_prompt(manifest)
    rep = spectral_report(
        groups,
        targets=cfg.targets,
        rho=cfg.rho,
        rho_t=cfg.rho_t,
        prompt_averaged=cfg.prompt_averaged,
        jobs=cfg.jobs,
    )
    inputs = report.dataset_digests(manifest_path, manifest)
    payload = report.spectral_payload(rep, cfg.echo(), inputs)
    markdown = report.spectral_markdown(rep, cfg.echo(), inputs)
    _write_outputs(cfg, out_prefix, payload, markdown)
    if "csv" in cfg.formats:
        write_scores(cfg.out_dir / f"{out_prefix}_records.csv", report.spectral_score_rows(rep))
        arm_rows = report.spectral_arm_rows(rep)
        if arm_rows:
            write_scores(cfg.out_dir / f"{out_prefix}_arms.csv", arm_rows)
    return rep


def _cmd_spectral(cfg: RunConfig) -> int:
    _run_spectral(cfg, cfg.manifest)
    print(f"spectral report written to {cfg.out_dir}")
    return EXIT_OK


def _paired_tables(cfg: RunConfig):
    if cfg.scores is not None:
        if cfg.baseline_scores or cfg.treatment_scores:
            raise ValueError("pass either --scores or the two per-arm files, not both")
        table = load_scores(cfg.scores)
        base, treat = paired.split_arms(table, cfg.baseline, cfg.treatment)
        digests = {"scores_sha256": report.file_sha256(cfg.scores)}
        return base, treat, digests
    if cfg.baseline_scores is None or cfg.treatment_scores is None:
        raise ValueError("need --scores, or both --baseline-scores and --treatment-scores")
    base = load_scores(cfg.baseline_scores)
    treat = load_scores(cfg.treatment_scores)
    digests = {
        "baseline_scores_sha256": report.file_sha256(cfg.baseline_scores),
        "treatment_scores_sha256": report.file_sha256(cfg.treatment_scores),
    }
    return base, treat, digests


def _cmd_paired(cfg: RunConfig) -> int:
    base, treat, digests = _paired_tables(cfg)
    rep = paired.paired_report(
        base,
        treat,
        cfg.metric,
        baseline_arm=cfg.baseline,
        treatment_arm=cfg.treatment,
        n_bootstrap=cfg.n_bootstrap,
        n_permutations=cfg.n_permutations,
        ci_level=cfg.ci_level,
        rng_seed=cfg.rng_seed,
        method=cfg.method,
        sided=cfg.sided,
    )
    payload = report.paired_payload(rep, cfg.echo(), digests)
    markdown = report.paired_markdown(rep, cfg.echo(), digests)
    _write_outputs(cfg, "paired", payload, markdown)
    print(f"paired report written to {cfg.out_dir}")
    return EXIT_OK


def _cmd_all(cfg: RunConfig) -> int:
    cfg.metric = cfg.metric or "sp_hf"
    cfg.baseline, cfg.treatment = "z", "zg"
    spec = synth.RegimeSpec.from_json_file(cfg.spec)
    dataset_dir = cfg.out_dir / "dataset"
    synth.generate_dataset(spec, dataset_dir)
    manifest_path = dataset_dir / "manifest.json"

    _run_geometry(cfg, manifest_path)
    spec_rep = _run_spectral(cfg, manifest_path)

    # Paired stage: sp_hf of z (baseline) vs z_g (treatment), seed-averaged.
    arm_rows = report.spectral_arm_rows(spec_rep)
    arms_path = cfg.out_dir / "spectral_arms.csv"
    write_scores(arms_path, arm_rows)
    table = load_scores(arms_path)
    base, treat = paired.split_arms(table, "z", "zg")
    metric = cfg.metric
    rep = paired.paired_report(
        base,
        treat,
        metric,
        baseline_arm="z",
        treatment_arm="zg",
        n_bootstrap=cfg.n_bootstrap,
        n_permutations=cfg.n_permutations,
        ci_level=cfg.ci_level,
        rng_seed=cfg.rng_seed,
        method=cfg.method,
        sided=cfg.sided,
    )
    digests = {"scores_sha256": report.file_sha256(arms_path)}
    payload = report.paired_payload(rep, cfg.echo(), digests)
    markdown = report.paired_markdown(rep, cfg.echo(), digests)
    _write_outputs(cfg, "paired", payload, markdown)
    print(f"full pipeline written to {cfg.out_dir}")
    return EXIT_OK


_HANDLERS = {
    "synth": _cmd_synth,
    "geometry": _cmd_geometry,
    "spectral": _cmd_spectral,
    "paired-test": _cmd_paired,
    "all": _cmd_all,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"noisediag: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        cfg = _config_from_args(args)
        return _HANDLERS[args.command](cfg)
    except DegenerateInputError as exc:
        print(f"noisediag: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (NoiseDiagError, ValueError, OSError) as exc:
        print(f"noisediag: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
