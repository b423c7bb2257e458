"""Tensor/manifest/score-table I/O: formats, error taxonomy, determinism."""

import json

import numpy as np
import pytest

from noisediag.dataio import (
    ScoreRow,
    ScoreTable,
    group_by_prompt,
    load_manifest,
    load_scores,
    load_tensor,
    save_tensor,
    write_scores,
)
from noisediag.errors import (
    ManifestError,
    ScoreParseError,
    ScoreTableError,
    TensorDataError,
    TensorFormatError,
    TensorShapeError,
)


class TestTensorIO:
    def test_f32_shape_passthrough(self, tmp_path, rng):
        x = rng.standard_normal((4, 16, 40, 64)).astype(np.float32)
        np.save(tmp_path / "t.npy", x)
        out = load_tensor(tmp_path / "t.npy")
        assert out.shape == (4, 16, 40, 64)
        assert out.dtype == np.float64
        assert out.flags.c_contiguous

    def test_3d_rejected(self, tmp_path):
        np.save(tmp_path / "t.npy", np.zeros((4, 16, 40), dtype=np.float32))
        with pytest.raises(TensorShapeError):
            load_tensor(tmp_path / "t.npy")

    def test_all_zero_tensor_loads(self, tmp_path):
        np.save(tmp_path / "t.npy", np.zeros((1, 2, 2, 2)))
        out = load_tensor(tmp_path / "t.npy")
        assert out.shape == (1, 2, 2, 2)
        assert np.all(out == 0.0)

    def test_nan_reports_first_flat_index(self, tmp_path):
        x = np.zeros((1, 2, 2, 2))
        x[0, 1, 0, 1] = np.nan  # flat index 5
        np.save(tmp_path / "t.npy", x)
        with pytest.raises(TensorDataError, match="flat index 5"):
            load_tensor(tmp_path / "t.npy")

    def test_inf_rejected(self, tmp_path):
        x = np.zeros((1, 1, 2, 2))
        x[0, 0, 1, 1] = np.inf
        np.save(tmp_path / "t.npy", x)
        with pytest.raises(TensorDataError):
            load_tensor(tmp_path / "t.npy")

    def test_wrong_dtype_rejected(self, tmp_path):
        np.save(tmp_path / "t.npy", np.zeros((1, 1, 2, 2), dtype=np.int32))
        with pytest.raises(TensorFormatError):
            load_tensor(tmp_path / "t.npy")

    def test_malformed_file_rejected(self, tmp_path):
        (tmp_path / "t.npy").write_bytes(b"\x93NUMPY garbage not a header")
        with pytest.raises(TensorFormatError):
            load_tensor(tmp_path / "t.npy")

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_tensor(tmp_path / "missing.npy")

    def test_fortran_order_normalized(self, tmp_path, rng):
        x = np.asfortranarray(rng.standard_normal((2, 3, 4, 5)))
        np.save(tmp_path / "t.npy", x)
        out = load_tensor(tmp_path / "t.npy")
        assert out.flags.c_contiguous
        np.testing.assert_array_equal(out, x)

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_roundtrip_payload_byte_identical(self, tmp_path, rng, dtype):
        x = rng.standard_normal((2, 3, 4, 5)).astype(dtype)
        np.save(tmp_path / "a.npy", x)
        loaded = load_tensor(tmp_path / "a.npy")
        save_tensor(tmp_path / "b.npy", loaded, dtype=dtype)
        a = np.load(tmp_path / "a.npy")
        b = np.load(tmp_path / "b.npy")
        assert a.dtype == b.dtype
        assert a.tobytes() == b.tobytes()

    def test_save_rejects_exotic_dtype(self, tmp_path):
        with pytest.raises(TensorFormatError):
            save_tensor(tmp_path / "t.npy", np.zeros((1, 1, 1, 1)), dtype=np.float16)


def _write_dataset(tmp_path, n_prompts=2, n_seeds=3, shape=(1, 2, 2, 2), declared=True):
    gen = np.random.default_rng(0)
    entries = []
    for p in range(n_prompts):
        for s in range(n_seeds):
            pz, pzg = f"p{p}_s{s}_z.npy", f"p{p}_s{s}_zg.npy"
            np.save(tmp_path / pz, gen.standard_normal(shape))
            np.save(tmp_path / pzg, gen.standard_normal(shape))
            entries.append(
                {"prompt_id": f"p{p}", "seed_id": f"s{s}", "path_z": pz, "path_zg": pzg}
            )
    doc = {"declared_shape": list(shape) if declared else None, "entries": entries}
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc))
    return path


class TestManifest:
    def test_two_prompts_three_seeds(self, tmp_path):
        manifest = load_manifest(_write_dataset(tmp_path))
        groups = group_by_prompt(manifest)
        assert [g.prompt_id for g in groups] == ["p0", "p1"]
        assert all(g.n_seeds == 3 for g in groups)
        assert [r.seed_id for r in groups[0].records] == ["s0", "s1", "s2"]

    def test_duplicate_pair_rejected(self, tmp_path):
        path = _write_dataset(tmp_path, n_prompts=1, n_seeds=1)
        doc = json.loads(path.read_text())
        doc["entries"].append(dict(doc["entries"][0]))
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestError, match="duplicate"):
            load_manifest(path)

    def test_empty_manifest_gives_empty_groups(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"declared_shape": None, "entries": []}))
        assert group_by_prompt(load_manifest(path)) == []

    def test_missing_tensor_file(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(
            json.dumps(
                {
                    "declared_shape": None,
                    "entries": [
                        {"prompt_id": "p", "seed_id": "s", "path_z": "no.npy", "path_zg": "no.npy"}
                    ],
                }
            )
        )
        with pytest.raises(ManifestError, match="missing tensor files"):
            load_manifest(path)

    def test_declared_shape_mismatch(self, tmp_path):
        path = _write_dataset(tmp_path, n_prompts=1, n_seeds=1, shape=(1, 2, 2, 2))
        doc = json.loads(path.read_text())
        doc["declared_shape"] = [1, 2, 2, 3]
        path.write_text(json.dumps(doc))
        with pytest.raises(TensorShapeError, match="declared_shape"):
            group_by_prompt(load_manifest(path))

    def test_record_shape_mismatch(self, tmp_path):
        np.save(tmp_path / "z.npy", np.zeros((1, 2, 2, 2)))
        np.save(tmp_path / "zg.npy", np.zeros((1, 2, 2, 3)))
        path = tmp_path / "m.json"
        path.write_text(
            json.dumps(
                {
                    "declared_shape": None,
                    "entries": [
                        {"prompt_id": "p", "seed_id": "s", "path_z": "z.npy", "path_zg": "zg.npy"}
                    ],
                }
            )
        )
        with pytest.raises(TensorShapeError):
            group_by_prompt(load_manifest(path))

    def test_group_ordering_deterministic(self, tmp_path):
        path = _write_dataset(tmp_path, n_prompts=3, n_seeds=2)
        # Scramble entry order in the file; loading must not care.
        doc = json.loads(path.read_text())
        doc["entries"] = doc["entries"][::-1]
        path.write_text(json.dumps(doc))
        g1 = group_by_prompt(load_manifest(path))
        g2 = group_by_prompt(load_manifest(path))
        ids1 = [(g.prompt_id, tuple(r.seed_id for r in g.records)) for g in g1]
        ids2 = [(g.prompt_id, tuple(r.seed_id for r in g.records)) for g in g2]
        assert ids1 == ids2 == sorted(ids1)

    def test_not_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("not json {")
        with pytest.raises(ManifestError):
            load_manifest(path)


class TestScores:
    def _write(self, tmp_path, text, name="s.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_counting_100x5(self, tmp_path):
        lines = ["prompt_id,seed_id,metric_name,value"]
        for p in range(100):
            for s in range(5):
                lines.append(f"p{p:03d},s{s},temporal_style,{0.01 * s + p * 1e-4}")
        table = load_scores(self._write(tmp_path, "\n".join(lines) + "\n"))
        assert len(table) == 500
        assert table.metric_names() == ("temporal_style",)

    def test_single_row(self, tmp_path):
        table = load_scores(
            self._write(tmp_path, "prompt_id,seed_id,metric_name,value\np1,s1,temporal_style,0.0769\n")
        )
        assert len(table) == 1
        assert table.rows[0].value == pytest.approx(0.0769)

    def test_nan_value_is_parse_error_with_line(self, tmp_path):
        path = self._write(
            tmp_path,
            "prompt_id,seed_id,metric_name,value\np1,s1,m,0.5\np1,s2,m,NaN\n",
        )
        with pytest.raises(ScoreParseError, match="line 3"):
            load_scores(path)

    def test_non_numeric_value(self, tmp_path):
        path = self._write(tmp_path, "prompt_id,seed_id,metric_name,value\np1,s1,m,oops\n")
        with pytest.raises(ScoreParseError, match="line 2"):
            load_scores(path)

    def test_duplicate_key_is_table_error(self, tmp_path):
        path = self._write(
            tmp_path,
            "prompt_id,seed_id,metric_name,value\np1,s1,m,0.5\np1,s1,m,0.6\n",
        )
        with pytest.raises(ScoreTableError, match="duplicate"):
            load_scores(path)

    def test_crlf_accepted(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_bytes(b"prompt_id,seed_id,metric_name,value\r\np1,s1,m,1.5\r\n")
        assert len(load_scores(path)) == 1

    def test_arm_column(self, tmp_path):
        path = self._write(
            tmp_path,
            "prompt_id,seed_id,metric_name,value,arm\np1,s1,m,0.5,base\np1,s1,m,0.6,mapped\n",
        )
        table = load_scores(path)
        assert table.arm_names() == ("base", "mapped")
        assert len(table.filter(arm="base")) == 1

    def test_unknown_column_rejected(self, tmp_path):
        path = self._write(tmp_path, "prompt_id,seed_id,metric_name,value,extra\n")
        with pytest.raises(ScoreParseError, match="unknown columns"):
            load_scores(path)

    def test_missing_column_rejected(self, tmp_path):
        path = self._write(tmp_path, "prompt_id,seed_id,value\n")
        with pytest.raises(ScoreParseError, match="missing columns"):
            load_scores(path)

    def test_write_read_roundtrip(self, tmp_path):
        rows = [
            ScoreRow("p1", "s1", "m", 0.123456789012345, "base"),
            ScoreRow("p1", "s1", "m", -1.5e-7, "mapped"),
        ]
        path = tmp_path / "out.csv"
        write_scores(path, rows)
        back = load_scores(path)
        assert [(r.prompt_id, r.seed_id, r.metric_name, r.value, r.arm) for r in back] == [
            (r.prompt_id, r.seed_id, r.metric_name, r.value, r.arm) for r in rows
        ]

    def test_table_duplicate_guard_in_constructor(self):
        rows = [ScoreRow("p", "s", "m", 1.0), ScoreRow("p", "s", "m", 2.0)]
        with pytest.raises(ScoreTableError):
            ScoreTable(rows)

    def test_by_prompt_view(self):
        table = ScoreTable(
            [ScoreRow("p1", "s1", "m", 1.0), ScoreRow("p1", "s2", "m", 2.0), ScoreRow("p2", "s1", "m", 3.0)]
        )
        nested = table.by_prompt("m")
        assert nested == {"p1": {"s1": 1.0, "s2": 2.0}, "p2": {"s1": 3.0}}
