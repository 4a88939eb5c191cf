"""File formats and report emission.

Logits CSV:   sample_id,label,f_0,...,f_{C-1}
Features CSV: sample_id,label,h_0,...,h_{D-1}
Probabilities CSV adds p_* columns and, for instance-specific policies,
a trailing tau_star column.

Floats are written with 17 significant digits so a write/read round trip
is exact. All files are UTF-8 with LF line endings.
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .affinity import AffinityReport
from .errors import ParseError
from .geometry import FeatureRecord
from .probability import LogitRecord

__version__ = "0.1.0"


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _open_lf(path):
    return open(path, "w", encoding="utf-8", newline="")


def _write_vector_csv(path, prefix: str, sample_ids, labels, values, extra=None):
    values = np.asarray(values, dtype=np.float64)
    header = ["sample_id", "label"] + [f"{prefix}_{i}" for i in range(values.shape[1])]
    if extra is not None:
        header.append(extra[0])
    with _open_lf(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, (sid, label) in enumerate(zip(sample_ids, labels)):
            row = [sid, int(label)] + [fmt_float(v) for v in values[i]]
            if extra is not None:
                row.append(fmt_float(extra[1][i]))
            w.writerow(row)


def write_logits_csv(path, records: list[LogitRecord]) -> None:
    _write_vector_csv(
        path,
        "f",
        [r.sample_id for r in records],
        [r.label for r in records],
        np.stack([r.logits for r in records]),
    )


def write_features_csv(path, records: list[FeatureRecord]) -> None:
    _write_vector_csv(
        path,
        "h",
        [r.sample_id for r in records],
        [r.label for r in records],
        np.stack([r.features for r in records]),
    )


def write_probs_csv(path, sample_ids, labels, probs, tau_star=None) -> None:
    extra = None if tau_star is None else ("tau_star", tau_star)
    _write_vector_csv(path, "p", sample_ids, labels, probs, extra=extra)


def _read_vector_csv(path, prefix: str):
    path = Path(path)
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise ParseError(str(exc), path=path) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", path=path, line=1) from None
        expected = [f"{prefix}_{i}" for i in range(len(header) - 2)]
        if header[:2] != ["sample_id", "label"] or header[2:] != expected:
            raise ParseError(
                f"bad header; expected sample_id,label,{prefix}_0,... "
                f"got {','.join(header)}",
                path=path,
                line=1,
            )
        if not expected:
            raise ParseError("no value columns", path=path, line=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} columns, got {len(row)}",
                    path=path,
                    line=lineno,
                )
            try:
                label = int(row[1])
                values = np.array([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ParseError(str(exc), path=path, line=lineno) from exc
            rows.append((row[0], label, values, lineno))
    return rows


def read_logits_csv(path) -> list[LogitRecord]:
    records = []
    for sid, label, values, lineno in _read_vector_csv(path, "f"):
        try:
            records.append(LogitRecord(sample_id=sid, label=label, logits=values))
        except Exception as exc:
            raise ParseError(str(exc), path=path, line=lineno) from exc
    if not records:
        raise ParseError("no data rows", path=path, line=2)
    return records


def read_features_csv(path) -> list[FeatureRecord]:
    records = []
    for sid, label, values, lineno in _read_vector_csv(path, "h"):
        try:
            records.append(FeatureRecord(sample_id=sid, label=label, features=values))
        except Exception as exc:
            raise ParseError(str(exc), path=path, line=lineno) from exc
    if not records:
        raise ParseError("no data rows", path=path, line=2)
    return records


def write_priors_csv(path, priors: dict) -> None:
    """Class priors in the logits-style format, one row per class."""
    classes = sorted(priors)
    _write_vector_csv(
        path,
        "p",
        [f"class_{c}" for c in classes],
        classes,
        np.stack([priors[c].mean_probs for c in classes]),
    )


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Provenance block written (last) next to every report."""

    command: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    version: str = __version__
    duration_s: float | None = None
    _start: float = field(default_factory=time.monotonic, repr=False)

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def write(self, path) -> None:
        self.duration_s = time.monotonic() - self._start
        payload = {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "version": self.version,
            "duration_s": self.duration_s,
        }
        with _open_lf(path) as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_affinity_report(out_dir, report: AffinityReport) -> None:
    """Per-sample CSV plus a JSON aggregate block."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with _open_lf(out_dir / "per_sample.csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [
                "sample_id",
                "overlap_ratio",
                "spearman",
                "kendall_signed",
                "kendall_paper",
                "non_gt_std_a",
                "non_gt_std_b",
            ]
        )
        for i, sid in enumerate(report.sample_ids):
            w.writerow(
                [
                    sid,
                    fmt_float(report.overlap_ratio[i]),
                    fmt_float(report.spearman[i]),
                    fmt_float(report.kendall_signed[i]),
                    fmt_float(report.kendall_paper[i]),
                    fmt_float(report.non_gt_std_a[i]),
                    fmt_float(report.non_gt_std_b[i]),
                ]
            )
    summary = {
        "k": report.k,
        "n_samples": len(report.sample_ids),
        "aggregates": report.aggregates,
        "overlap_histogram": report.overlap_histogram,
    }
    with _open_lf(out_dir / "summary.json") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
