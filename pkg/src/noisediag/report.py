"""Report payloads and emitters.

Every report carries the same envelope: tool name/version/kernel backend, a
config echo, SHA-256 digests of the inputs, and the results block.  JSON is
written with sorted keys, two-space indentation, and no timestamps, so
identical configurations on identical inputs produce byte-identical files.
Markdown tables print every number with six decimal places; the JSON keeps
full precision, and the two agree at the printed precision by construction.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__
from ._kernels import BACKEND
from .dataio import DatasetManifest, ScoreRow
from .geometry import GeometryReport
from .paired import PairedReport
from .spectral import SpectralReport


def fmt6(value: float) -> str:
    return f"{value:.6f}"


def fmt6_signed(value: float) -> str:
    return f"{value:+.6f}"


def tool_info() -> dict:
    return {"name": "noisediag", "version": __version__, "kernel_backend": BACKEND}


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def dataset_digests(manifest_path: str | Path, manifest: DatasetManifest) -> dict:
    """Digest of the manifest file plus a combined digest of all tensors."""
    combined = hashlib.sha256()
    for entry in sorted(manifest.entries, key=lambda e: (e.prompt_id, e.seed_id)):
        for p in (entry.path_z, entry.path_zg):
            combined.update(file_sha256(p).encode("ascii"))
    return {
        "manifest_sha256": file_sha256(manifest_path),
        "data_sha256": combined.hexdigest(),
    }


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _envelope(command: str, config: dict, inputs: dict, results: dict) -> dict:
    config = dict(config)
    config.setdefault("rng_seed", None)
    return {
        "tool": tool_info(),
        "command": command,
        "config": config,
        "inputs": inputs,
        "results": results,
    }


def _md_header(title: str, config: dict, inputs: dict) -> list[str]:
    info = tool_info()
    lines = [
        f"# {title}",
        "",
        f"Generated by {info['name']} {info['version']} (kernels: {info['kernel_backend']}).",
        "",
        f"Config: `{json.dumps(config, sort_keys=True)}`",
        "",
    ]
    for key in sorted(inputs):
        lines.append(f"- {key}: `{inputs[key]}`")
    lines.append("")
    return lines


# -- geometry ----------------------------------------------------------------


def geometry_payload(rep: GeometryReport, config: dict, inputs: dict) -> dict:
    results = {
        "n_prompts": rep.n_prompts,
        "n_records": rep.n_records,
        "record_level": rep.record_level,
        "prompt_level": rep.prompt_level,
        "per_prompt": [
            {
                "prompt_id": p.prompt_id,
                "n_seeds": p.n_seeds,
                "dir_stab": p.dir_stab,
                "cv_dnorm": p.cv_dnorm,
                "evr1": p.evr1,
                "rel_disp_mean": p.rel_disp_mean,
                "cos_sim_mean": p.cos_sim_mean,
            }
            for p in rep.per_prompt
        ],
    }
    return _envelope("geometry", config, inputs, results)


def geometry_markdown(rep: GeometryReport, config: dict, inputs: dict) -> str:
    lines = _md_header("Geometry and directional consistency", config, inputs)
    lines += [
        "| Metric | Aggregation | Value |",
        "| --- | --- | --- |",
        f"| rel_disp | mean over records | {fmt6(rep.record_level['rel_disp']['mean'])} |",
        f"| rel_disp | mean over prompt means | {fmt6(rep.prompt_level['rel_disp']['mean'])} |",
        f"| cos_sim | mean over records | {fmt6(rep.record_level['cos_sim']['mean'])} |",
        f"| cos_sim | mean over prompt means | {fmt6(rep.prompt_level['cos_sim']['mean'])} |",
    ]
    for metric in ("dir_stab", "cv_dnorm", "evr1"):
        stats = rep.prompt_level[metric]
        lines.append(f"| {metric} | mean over prompts | {fmt6(stats['mean'])} |")
        lines.append(f"| {metric} | median over prompts | {fmt6(stats['median'])} |")
    lines.append("")
    return "\n".join(lines) + "\n"


def geometry_score_rows(rep: GeometryReport) -> tuple[list[ScoreRow], list[ScoreRow]]:
    """(per-record rows, per-prompt rows); prompt rows use seed_id '-'."""
    record_rows = []
    for r in rep.per_record:
        record_rows.append(ScoreRow(r.prompt_id, r.seed_id, "rel_disp", r.rel_disp))
        record_rows.append(ScoreRow(r.prompt_id, r.seed_id, "cos_sim", r.cos_sim))
        record_rows.append(ScoreRow(r.prompt_id, r.seed_id, "d_norm", r.d_norm))
    prompt_rows = []
    for p in rep.per_prompt:
        prompt_rows.append(ScoreRow(p.prompt_id, "-", "dir_stab", p.dir_stab))
        prompt_rows.append(ScoreRow(p.prompt_id, "-", "cv_dnorm", p.cv_dnorm))
        prompt_rows.append(ScoreRow(p.prompt_id, "-", "evr1", p.evr1))
    return record_rows, prompt_rows


# -- spectral ----------------------------------------------------------------


def spectral_payload(rep: SpectralReport, config: dict, inputs: dict) -> dict:
    summary = {
        target: {
            metric: {"mean": s.mean, "p10": s.p10, "p90": s.p90}
            for metric, s in metrics.items()
        }
        for target, metrics in rep.summary.items()
    }
    results = {
        "n_records": rep.n_records,
        "n_prompts": rep.n_prompts,
        "aggregation": rep.aggregation,
        "rho": rep.rho,
        "rho_t": rep.rho_t,
        "targets": list(rep.targets),
        "summary": summary,
        "delta_sp_hf": (
            None
            if rep.delta_sp_hf is None
            else {
                "mean": rep.delta_sp_hf.mean,
                "p10": rep.delta_sp_hf.p10,
                "p90": rep.delta_sp_hf.p90,
            }
        ),
    }
    return _envelope("spectral", config, inputs, results)


def spectral_markdown(rep: SpectralReport, config: dict, inputs: dict) -> str:
    lines = _md_header("Frequency summary", config, inputs)
    lines += ["| Metric | Mean | P10 | P90 |", "| --- | --- | --- | --- |"]
    if rep.delta_sp_hf is not None:
        d = rep.delta_sp_hf
        lines.append(
            f"| delta_sp_hf (zg - z) | {fmt6(d.mean)} | {fmt6(d.p10)} | {fmt6(d.p90)} |"
        )
    for target in rep.targets:
        for metric in ("sp_hf", "t_hf", "t_diff_rms", "t_diff_rel"):
            s = rep.summary[target][metric]
            lines.append(
                f"| {metric}({target}) | {fmt6(s.mean)} | {fmt6(s.p10)} | {fmt6(s.p90)} |"
            )
    lines.append("")
    return "\n".join(lines) + "\n"


def spectral_score_rows(rep: SpectralReport) -> list[ScoreRow]:
    """Flat per-record rows, metric names suffixed by target (sp_hf_d, ...)."""
    rows = []
    for rec in rep.per_record:
        for name, value in rec.values.items():
            rows.append(ScoreRow(rec.prompt_id, rec.seed_id, name, value))
    return rows


def spectral_arm_rows(rep: SpectralReport) -> list[ScoreRow]:
    """Arm-labelled rows pairing z against zg, ready for `paired-test`."""
    rows = []
    for rec in rep.per_record:
        for name, value in rec.values.items():
            metric, _, target = name.rpartition("_")
            if target in ("z", "zg") and metric:
                rows.append(ScoreRow(rec.prompt_id, rec.seed_id, metric, value, arm=target))
    return rows


# -- paired ------------------------------------------------------------------


def paired_payload(rep: PairedReport, config: dict, inputs: dict) -> dict:
    res = rep.result
    results = {
        "metric": res.metric,
        "baseline_arm": res.baseline_arm,
        "treatment_arm": res.treatment_arm,
        "n_prompts": res.n_prompts,
        "baseline_mean": res.baseline_mean,
        "treatment_mean": res.treatment_mean,
        "mean_delta": res.mean_delta,
        "ci_low": res.ci_low,
        "ci_high": res.ci_high,
        "ci_level": res.ci_level,
        "n_bootstrap": res.n_bootstrap,
        "p_value": res.p_value,
        "n_permutations": "exact" if res.permutation_mode == "exact" else res.n_permutations,
        "permutation_count": res.n_permutations,
        "permutation_mode": res.permutation_mode,
        "sided": res.sided,
        "rng_seed": res.rng_seed,
        "per_prompt": [
            {
                "prompt_id": s.prompt_id,
                "baseline": s.baseline,
                "treatment": s.treatment,
                "delta": s.delta,
            }
            for s in rep.samples
        ],
    }
    return _envelope("paired-test", config, inputs, results)


def paired_markdown(rep: PairedReport, config: dict, inputs: dict) -> str:
    res = rep.result
    ci_pct = round(res.ci_level * 100)
    lines = _md_header("Prompt-level paired significance analysis", config, inputs)
    lines += [
        f"Seed-averaged over {res.n_prompts} prompts; delta is "
        f"{res.treatment_arm} minus {res.baseline_arm}.",
        "",
        f"| Metric | {res.baseline_arm} | {res.treatment_arm} | Mean Δ | "
        f"{ci_pct}% CI (bootstrap) | p (perm.) |",
        "| --- | --- | --- | --- | --- | --- |",
        f"| {res.metric} | {fmt6(res.baseline_mean)} | {fmt6(res.treatment_mean)} | "
        f"{fmt6_signed(res.mean_delta)} | [{fmt6(res.ci_low)}, {fmt6(res.ci_high)}] | "
        f"{fmt6(res.p_value)} |",
        "",
        f"Permutation mode: {res.permutation_mode} ({res.n_permutations} patterns), "
        f"{res.sided}; bootstrap resamples: {res.n_bootstrap}; rng_seed: {res.rng_seed}.",
        "",
    ]
    return "\n".join(lines) + "\n"
