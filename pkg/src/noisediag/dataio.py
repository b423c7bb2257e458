"""Tensor data model, dataset manifests, and bit-exact file I/O.

Latent tensors are dense 4-D float arrays with axes (channel, time, height,
width), stored as NPY v1/v2 files with element type ``<f4`` or ``<f8`` and
promoted to float64 for all computation.  Non-finite values are rejected at
load time so downstream metrics can assume finite inputs.

A dataset manifest is a JSON document pairing each (prompt_id, seed_id)
with one baseline tensor ``z`` and one transformed tensor ``z_g``; paths
are resolved relative to the manifest's directory.  Groups and records are
returned in sorted (prompt_id, then seed_id) order so every downstream
statistic sees a deterministic ordering.  See FORMATS.md for the schemas.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    ManifestError,
    ScoreParseError,
    ScoreTableError,
    TensorDataError,
    TensorFormatError,
    TensorShapeError,
)

_ACCEPTED_DTYPES = (np.dtype("<f4"), np.dtype("<f8"), np.dtype("=f4"), np.dtype("=f8"))

SCORE_COLUMNS = ("prompt_id", "seed_id", "metric_name", "value")


@dataclass(frozen=True)
class SampleRecord:
    """One (prompt, seed) pair of tensors: baseline z and transformed z_g."""

    prompt_id: str
    seed_id: str
    z: np.ndarray
    z_g: np.ndarray


@dataclass(frozen=True)
class PromptGroup:
    """All seed records for one prompt, sorted by seed_id."""

    prompt_id: str
    records: tuple[SampleRecord, ...]

    @property
    def n_seeds(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ManifestEntry:
    prompt_id: str
    seed_id: str
    path_z: Path
    path_zg: Path


@dataclass(frozen=True)
class DatasetManifest:
    """Parsed manifest; entry paths are already resolved against its directory."""

    entries: tuple[ManifestEntry, ...]
    declared_shape: tuple[int, int, int, int] | None
    root: Path


@dataclass(frozen=True)
class ScoreRow:
    prompt_id: str
    seed_id: str
    metric_name: str
    value: float
    arm: str | None = None


class ScoreTable:
    """Immutable per-(prompt, seed, metric[, arm]) scalar scores.

    The key (prompt_id, seed_id, metric_name, arm) must be unique and every
    value finite; both are enforced at construction.
    """

    def __init__(self, rows: Iterable[ScoreRow]):
        rows = tuple(rows)
        seen: set[tuple[str, str, str, str | None]] = set()
        for row in rows:
            if not math.isfinite(row.value):
                raise ScoreTableError(
                    f"non-finite value for ({row.prompt_id}, {row.seed_id}, {row.metric_name})"
                )
            key = (row.prompt_id, row.seed_id, row.metric_name, row.arm)
            if key in seen:
                raise ScoreTableError(f"duplicate score row for key {key}")
            seen.add(key)
        self._rows = rows

    @property
    def rows(self) -> tuple[ScoreRow, ...]:
        return self._rows

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self) -> Iterator[ScoreRow]:
        return iter(self._rows)

    def filter(self, metric: str | None = None, arm: str | None = None) -> "ScoreTable":
        """Sub-table with the given metric_name and/or arm label."""
        rows = [
            r
            for r in self._rows
            if (metric is None or r.metric_name == metric) and (arm is None or r.arm == arm)
        ]
        return ScoreTable(rows)

    def metric_names(self) -> tuple[str, ...]:
        return tuple(sorted({r.metric_name for r in self._rows}))

    def arm_names(self) -> tuple[str, ...]:
        return tuple(sorted({r.arm for r in self._rows if r.arm is not None}))

    def by_prompt(self, metric: str, arm: str | None = None) -> dict[str, dict[str, float]]:
        """Nested {prompt_id: {seed_id: value}} view of one metric (and arm)."""
        out: dict[str, dict[str, float]] = {}
        for r in self._rows:
            if r.metric_name != metric:
                continue
            if arm is not None and r.arm != arm:
                continue
            out.setdefault(r.prompt_id, {})[r.seed_id] = r.value
        return out


def load_tensor(path: str | Path) -> np.ndarray:
    """Load a 4-D NPY tensor, promoted to float64 and row-major.

    Raises TensorFormatError for unreadable files or unaccepted dtypes,
    TensorShapeError when the array is not 4-D, and TensorDataError (naming
    the first offending flat index) when any value is NaN or Inf.
    """
    path = Path(path)
    try:
        arr = np.load(path, allow_pickle=False)
    except FileNotFoundError:
        raise
    except Exception as exc:  # numpy raises several types for malformed headers
        raise TensorFormatError(f"{path}: not a readable NPY array ({exc})") from exc
    if not isinstance(arr, np.ndarray):
        raise TensorFormatError(f"{path}: expected a plain array, got {type(arr).__name__}")
    if arr.dtype not in _ACCEPTED_DTYPES:
        raise TensorFormatError(f"{path}: dtype {arr.dtype.str!r} not in (<f4, <f8)")
    if arr.ndim != 4:
        raise TensorShapeError(f"{path}: expected 4 dimensions (C, T, H, W), got {arr.ndim}")
    out = np.ascontiguousarray(arr, dtype=np.float64)
    finite = np.isfinite(out)
    if not finite.all():
        first = int(np.argmax(~finite.ravel()))
        raise TensorDataError(f"{path}: non-finite value at flat index {first}")
    return out


def save_tensor(path: str | Path, arr: np.ndarray, dtype: np.dtype | str | None = None) -> None:
    """Write a 4-D tensor as NPY.

    ``dtype`` defaults to the array's own dtype; only <f4 and <f8 are
    accepted.  Saving with the dtype a file was loaded from reproduces its
    payload byte for byte (the header is re-serialized canonically).
    """
    arr = np.asarray(arr)
    if arr.ndim != 4:
        raise TensorShapeError(f"expected 4 dimensions, got {arr.ndim}")
    target = np.dtype(dtype) if dtype is not None else arr.dtype
    if target not in _ACCEPTED_DTYPES:
        raise TensorFormatError(f"refusing to write dtype {target.str!r}; use <f4 or <f8")
    np.save(Path(path), np.ascontiguousarray(arr, dtype=target), allow_pickle=False)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse and validate a dataset manifest JSON file.

    Duplicate (prompt_id, seed_id) pairs and unresolvable tensor paths are
    manifest errors; tensor contents are not read here.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: cannot parse manifest ({exc})") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise ManifestError(f"{path}: manifest must be an object with an 'entries' list")

    declared = doc.get("declared_shape")
    declared_shape: tuple[int, int, int, int] | None = None
    if declared is not None:
        if (
            not isinstance(declared, list)
            or len(declared) != 4
            or not all(isinstance(v, int) and v >= 1 for v in declared)
        ):
            raise ManifestError(f"{path}: declared_shape must be 4 positive integers or null")
        declared_shape = tuple(declared)  # type: ignore[assignment]

    root = path.parent
    entries: list[ManifestEntry] = []
    seen: set[tuple[str, str]] = set()
    for i, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict):
            raise ManifestError(f"{path}: entry {i} is not an object")
        try:
            prompt_id = raw["prompt_id"]
            seed_id = raw["seed_id"]
            path_z = raw["path_z"]
            path_zg = raw["path_zg"]
        except KeyError as exc:
            raise ManifestError(f"{path}: entry {i} is missing key {exc}") from exc
        if not all(isinstance(v, str) for v in (prompt_id, seed_id, path_z, path_zg)):
            raise ManifestError(f"{path}: entry {i} fields must be strings")
        key = (prompt_id, seed_id)
        if key in seen:
            raise ManifestError(f"{path}: duplicate entry for (prompt, seed) {key}")
        seen.add(key)
        entries.append(ManifestEntry(prompt_id, seed_id, root / path_z, root / path_zg))

    missing = [
        str(p)
        for e in entries
        for p in (e.path_z, e.path_zg)
        if not p.is_file()
    ]
    if missing:
        raise ManifestError(f"{path}: missing tensor files: {', '.join(missing)}")
    return DatasetManifest(tuple(entries), declared_shape, root)


def group_by_prompt(manifest: DatasetManifest) -> list[PromptGroup]:
    """Load all tensors and group records per prompt.

    Groups come back sorted by prompt_id and records by seed_id.  Each
    record's z and z_g must share one shape, the whole group must share it
    too, and it must match declared_shape when that is set.
    """
    groups: dict[str, list[SampleRecord]] = {}
    for entry in sorted(manifest.entries, key=lambda e: (e.prompt_id, e.seed_id)):
        z = load_tensor(entry.path_z)
        z_g = load_tensor(entry.path_zg)
        if z.shape != z_g.shape:
            raise TensorShapeError(
                f"record ({entry.prompt_id}, {entry.seed_id}): z shape {z.shape} "
                f"!= z_g shape {z_g.shape}"
            )
        if manifest.declared_shape is not None and z.shape != manifest.declared_shape:
            raise TensorShapeError(
                f"record ({entry.prompt_id}, {entry.seed_id}): shape {z.shape} "
                f"does not match declared_shape {manifest.declared_shape}"
            )
        groups.setdefault(entry.prompt_id, []).append(
            SampleRecord(entry.prompt_id, entry.seed_id, z, z_g)
        )

    out: list[PromptGroup] = []
    for prompt_id in sorted(groups):
        records = groups[prompt_id]
        shapes = {r.z.shape for r in records}
        if len(shapes) > 1:
            raise TensorShapeError(f"prompt {prompt_id!r}: mixed shapes {sorted(shapes)}")
        out.append(PromptGroup(prompt_id, tuple(records)))
    return out


def load_scores(path: str | Path) -> ScoreTable:
    """Read a score CSV (UTF-8, LF or CRLF) into a ScoreTable.

    The header must contain prompt_id, seed_id, metric_name, value, plus an
    optional arm column.  Non-numeric or non-finite values raise
    ScoreParseError with the offending 1-based file line number.
    """
    path = Path(path)
    rows: list[ScoreRow] = []
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ScoreParseError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        unknown = [h for h in header if h not in SCORE_COLUMNS + ("arm",)]
        if unknown:
            raise ScoreParseError(f"{path}: line 1: unknown columns {unknown}")
        missing = [c for c in SCORE_COLUMNS if c not in header]
        if missing:
            raise ScoreParseError(f"{path}: line 1: missing columns {missing}")
        col = {name: header.index(name) for name in header}
        has_arm = "arm" in col

        for lineno, raw in enumerate(reader, start=2):
            if not raw or (len(raw) == 1 and not raw[0].strip()):
                continue  # tolerate a trailing blank line
            if len(raw) != len(header):
                raise ScoreParseError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(raw)}"
                )
            text = raw[col["value"]].strip()
            try:
                value = float(text)
            except ValueError:
                raise ScoreParseError(f"{path}: line {lineno}: bad value {text!r}") from None
            if not math.isfinite(value):
                raise ScoreParseError(f"{path}: line {lineno}: non-finite value {text!r}")
            rows.append(
                ScoreRow(
                    prompt_id=raw[col["prompt_id"]].strip(),
                    seed_id=raw[col["seed_id"]].strip(),
                    metric_name=raw[col["metric_name"]].strip(),
                    value=value,
                    arm=raw[col["arm"]].strip() if has_arm else None,
                )
            )
    try:
        return ScoreTable(rows)
    except ScoreTableError as exc:
        raise ScoreTableError(f"{path}: {exc}") from None


def write_scores(path: str | Path, table: ScoreTable | Iterable[ScoreRow]) -> None:
    """Write rows as a canonical score CSV (LF line endings, repr floats)."""
    rows = tuple(table) if not isinstance(table, ScoreTable) else table.rows
    has_arm = any(r.arm is not None for r in rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS + ("arm",) if has_arm else SCORE_COLUMNS)
        for r in rows:
            base = [r.prompt_id, r.seed_id, r.metric_name, repr(r.value)]
            writer.writerow(base + [r.arm or ""] if has_arm else base)
