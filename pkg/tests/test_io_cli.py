import json
import subprocess
import sys

import numpy as np
import pytest

from distillab import io as dio
from distillab.cli import main
from distillab.errors import ParseError
from distillab.geometry import FeatureRecord
from distillab.policies import (
    DEFAULT_ISATS_GRID,
    TemperaturePolicy,
    find_instance_temperature,
    policy_rows,
)
from distillab.probability import LogitRecord


def _records(seed=0, n=20, c=6):
    rng = np.random.default_rng(seed)
    logits = rng.normal(0, 3, size=(n, c))
    labels = rng.integers(c, size=n)
    return [
        LogitRecord(str(i), int(labels[i]), logits[i]) for i in range(n)
    ]


class TestCsvRoundTrip:
    def test_logits_exact(self, tmp_path):
        records = _records()
        path = tmp_path / "logits.csv"
        dio.write_logits_csv(path, records)
        back = dio.read_logits_csv(path)
        assert len(back) == len(records)
        for a, b in zip(records, back):
            assert a.sample_id == b.sample_id
            assert a.label == b.label
            np.testing.assert_array_equal(a.logits, b.logits)  # bit-exact

    def test_features_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        records = [
            FeatureRecord(str(i), int(i % 3), rng.normal(size=5)) for i in range(9)
        ]
        path = tmp_path / "features.csv"
        dio.write_features_csv(path, records)
        back = dio.read_features_csv(path)
        for a, b in zip(records, back):
            np.testing.assert_array_equal(a.features, b.features)

    def test_rewrite_is_byte_identical(self, tmp_path):
        records = _records(seed=2)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        dio.write_logits_csv(p1, records)
        dio.write_logits_csv(p2, dio.read_logits_csv(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_extreme_floats_survive(self, tmp_path):
        rec = [
            LogitRecord("x", 0, np.array([1e-300, -1e300, 3.141592653589793]))
        ]
        path = tmp_path / "l.csv"
        dio.write_logits_csv(path, rec)
        back = dio.read_logits_csv(path)
        np.testing.assert_array_equal(back[0].logits, rec[0].logits)


class TestParseErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            dio.read_logits_csv(tmp_path / "nope.csv")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            dio.read_logits_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,label,f_0,f_1\nx,0,1.0,2.0\n")
        with pytest.raises(ParseError, match="header"):
            dio.read_logits_csv(path)

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("sample_id,label,f_0,f_1\na,0,1.0,2.0\nb,1,3.0\n")
        with pytest.raises(ParseError) as err:
            dio.read_logits_csv(path)
        assert err.value.line == 3
        assert ":3:" in str(err.value)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "nan.csv"
        path.write_text("sample_id,label,f_0,f_1\na,0,1.0,oops\n")
        with pytest.raises(ParseError) as err:
            dio.read_logits_csv(path)
        assert err.value.line == 2
        assert ":2:" in str(err.value)

    def test_header_only_is_error(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("sample_id,label,f_0,f_1\n")
        with pytest.raises(ParseError):
            dio.read_logits_csv(path)


@pytest.fixture
def logits_file(tmp_path):
    path = tmp_path / "logits.csv"
    dio.write_logits_csv(path, _records(seed=3))
    return path


class TestScaleCommand:
    def test_ts_output_matches_library(self, tmp_path, logits_file):
        out = tmp_path / "probs.csv"
        rc = main(
            ["scale", "--logits", str(logits_file), "--policy", "ts:4.0",
             "--out", str(out)]
        )
        assert rc == 0
        records = dio.read_logits_csv(logits_file)
        logits = np.stack([r.logits for r in records])
        labels = np.array([r.label for r in records])
        expected, _ = policy_rows(logits, labels, TemperaturePolicy.ts(4.0))
        rows = out.read_text().strip().split("\n")[1:]
        got = np.array([[float(v) for v in r.split(",")[2:]] for r in rows])
        np.testing.assert_array_equal(got, expected)

    def test_ats_equal_taus_bitwise_matches_ts(self, tmp_path, logits_file):
        out_ts = tmp_path / "ts.csv"
        out_ats = tmp_path / "ats.csv"
        main(["scale", "--logits", str(logits_file), "--policy", "ts:3.0",
              "--out", str(out_ts)])
        main(["scale", "--logits", str(logits_file), "--policy", "ats:3.0,3.0",
              "--out", str(out_ats)])
        ts_rows = out_ts.read_text().split("\n")[1:]
        ats_rows = out_ats.read_text().split("\n")[1:]
        for a, b in zip(ts_rows, ats_rows):
            va = [float(x) for x in a.split(",")[2:]] if a else []
            vb = [float(x) for x in b.split(",")[2:]] if b else []
            np.testing.assert_allclose(va, vb, atol=1e-12)

    def test_isats_tau_star_column_matches_grid_search(
        self, tmp_path, logits_file
    ):
        out = tmp_path / "isats.csv"
        rc = main(
            ["scale", "--logits", str(logits_file), "--policy",
             "isats:1,2,3,4,5,6,8;+1.0", "--out", str(out)]
        )
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].endswith(",tau_star")
        records = dio.read_logits_csv(logits_file)
        for line, rec in zip(lines[1:], records):
            tau_star = float(line.split(",")[-1])
            assert tau_star == find_instance_temperature(rec, DEFAULT_ISATS_GRID)

    def test_idempotent_rerun(self, tmp_path, logits_file):
        out = tmp_path / "p.csv"
        main(["scale", "--logits", str(logits_file), "--policy", "ts:2.0",
              "--out", str(out)])
        first = out.read_bytes()
        main(["scale", "--logits", str(logits_file), "--policy", "ts:2.0",
              "--out", str(out)])
        assert out.read_bytes() == first

    def test_writes_manifest(self, tmp_path, logits_file):
        out = tmp_path / "p.csv"
        main(["scale", "--logits", str(logits_file), "--policy", "ts:2.0",
              "--out", str(out)])
        manifest = json.loads((tmp_path / "p.manifest.json").read_text())
        assert manifest["command"] == "scale"
        assert str(logits_file) in manifest["inputs"]
        assert manifest["inputs"][str(logits_file)] == dio.sha256_file(logits_file)

    def test_bad_policy_exit_code(self, tmp_path, logits_file, capsys):
        rc = main(["scale", "--logits", str(logits_file), "--policy", "warp:9",
                   "--out", str(tmp_path / "x.csv")])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_missing_input_exit_code(self, tmp_path, capsys):
        rc = main(["scale", "--logits", str(tmp_path / "missing.csv"),
                   "--policy", "ts:4.0", "--out", str(tmp_path / "x.csv")])
        assert rc == 3


class TestAnalyzeCommand:
    def test_self_analysis(self, tmp_path, logits_file):
        out_dir = tmp_path / "report"
        rc = main(["analyze", str(logits_file), str(logits_file), "--k", "3",
                   "--out-dir", str(out_dir)])
        assert rc == 0
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["aggregates"]["kendall_signed"]["mean"] == pytest.approx(1.0)
        assert summary["aggregates"]["overlap_ratio"]["mean"] == pytest.approx(1.0)
        assert summary["kendall"] == summary["aggregates"]["kendall_signed"]
        assert (out_dir / "per_sample.csv").exists()
        assert (out_dir / "manifest.json").exists()

    def test_paper_convention_alias(self, tmp_path, logits_file):
        out_dir = tmp_path / "report"
        main(["analyze", str(logits_file), str(logits_file), "--k", "3",
              "--kendall-convention", "paper", "--out-dir", str(out_dir)])
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["kendall"] == summary["aggregates"]["kendall_paper"]

    def test_reports_are_idempotent(self, tmp_path, logits_file):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        args = ["analyze", str(logits_file), str(logits_file), "--k", "3"]
        main(args + ["--out-dir", str(out_a)])
        main(args + ["--out-dir", str(out_b)])
        for name in ("per_sample.csv", "summary.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_misaligned_inputs_exit_code(self, tmp_path, logits_file, capsys):
        other = tmp_path / "other.csv"
        dio.write_logits_csv(other, _records(seed=4, n=5))
        rc = main(["analyze", str(logits_file), str(other), "--k", "3",
                   "--out-dir", str(tmp_path / "r")])
        assert rc == 4


class TestAnglesCommand:
    def test_runs_and_writes(self, tmp_path):
        rng = np.random.default_rng(5)
        records = [
            FeatureRecord(str(i), int(i % 2), rng.normal(size=4))
            for i in range(10)
        ]
        feats = tmp_path / "h.csv"
        dio.write_features_csv(feats, records)
        out_dir = tmp_path / "angles"
        rc = main(["angles", "--features", str(feats), "--out-dir", str(out_dir)])
        assert rc == 0
        lines = (out_dir / "angles.csv").read_text().strip().split("\n")
        assert lines[0].startswith("within_mean_deg")
        within_mean = float(lines[1].split(",")[0])
        assert 0.0 <= within_mean <= 180.0


class TestCliProcess:
    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "distillab.cli", "--help"],
            capture_output=True,
        )
        assert proc.returncode == 0
        assert b"distillab" in proc.stdout

    def test_usage_error_exit_code(self):
        proc = subprocess.run(
            [sys.executable, "-m", "distillab.cli"], capture_output=True
        )
        assert proc.returncode == 2


class TestPriorsCsv:
    def test_write_priors(self, tmp_path):
        from distillab.adjust import build_class_priors

        records = _records(seed=6, n=30, c=4)
        priors = build_class_priors(records, tau0=3.0)
        path = tmp_path / "priors.csv"
        dio.write_priors_csv(path, priors)
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 5
        assert lines[1].startswith("class_0,0,")


class TestLabCommands:
    def _config(self, tmp_path, extra=None):
        cfg = {
            "task": {
                "n_superclasses": 2,
                "n_fine_per_super": 3,
                "input_dim": 6,
                "n_train_per_class": 30,
                "n_test_per_class": 15,
                "noise_std": 1.0,
                "seed": 0,
            },
            "train": {"epochs": 3, "batch_size": 32},
            "capacities": [4, 8],
            "k": 3,
        }
        if extra:
            cfg.update(extra)
        path = tmp_path / "lab.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_observe_writes_reports(self, tmp_path):
        cfg = self._config(tmp_path)
        out_dir = tmp_path / "obs"
        rc = main(["lab", "observe", "--config", str(cfg),
                   "--out-dir", str(out_dir)])
        assert rc == 0
        per_cap = (out_dir / "per_capacity.csv").read_text().strip().split("\n")
        assert per_cap[0].startswith("width,n_params,")
        assert len(per_cap) == 3  # header + 2 capacities
        assert (out_dir / "pairwise.csv").exists()
        assert (out_dir / "summary.json").exists()
        assert (out_dir / "logits_w4.csv").exists()
        assert (out_dir / "features_w8.csv").exists()
        # exported logits round-trip through the analyze pipeline
        back = dio.read_logits_csv(out_dir / "logits_w4.csv")
        assert len(back) == 2 * 3 * 30

    def test_mismatch_writes_reports(self, tmp_path):
        cfg = self._config(
            tmp_path,
            {"small_width": 8, "large_width": 32, "student_width": 4,
             "seeds": [0]},
        )
        out_dir = tmp_path / "mm"
        rc = main(["lab", "mismatch", "--config", str(cfg),
                   "--out-dir", str(out_dir)])
        assert rc == 0
        cells = (out_dir / "cells.csv").read_text().strip().split("\n")
        assert cells[0] == "cell,seed_0,median,iqr"
        assert len(cells) == 8  # header + 7 cells
        summary = json.loads((out_dir / "summary.json").read_text())
        assert set(summary["medians"]) == {
            "nokd", "kd_small_ts", "kd_large_ts", "kd_large_ats",
            "kd_large_isats", "kd_large_fgcr", "kd_large_regt",
        }

    def test_bad_config_json_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        rc = main(["lab", "observe", "--config", str(path),
                   "--out-dir", str(tmp_path / "o")])
        assert rc == 3

    def test_unknown_config_key_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"train": {"warp_factor": 9}}))
        rc = main(["lab", "observe", "--config", str(path),
                   "--out-dir", str(tmp_path / "o")])
        assert rc == 2
