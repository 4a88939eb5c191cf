"""Command-line surface.

    distillab analyze A.csv B.csv --k 5 --tau 4.0 --out-dir report/
    distillab scale --logits in.csv --policy isats:1,2,3,4,5,6,8;+1.0 --out p.csv
    distillab angles --features h.csv --cap 200000 --seed 0 --out-dir report/
    distillab lab observe --config cfg.json --out-dir report/
    distillab lab mismatch --config cfg.json --out-dir report/

Exit codes: 0 success, 2 usage/config, 3 parse, 4 run/input errors.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import io as dio
from .affinity import compare_teachers
from .errors import DistillabError, ParseError, UsageError
from .geometry import DEFAULT_PAIR_CAP, class_angle_stats
from .lab.data import GroupTaskSpec, generate_group_task
from .lab.suites import run_mismatch_suite, run_observation_suite
from .lab.train import TrainConfig
from .policies import parse_policy, policy_rows


def _angle_row(bucket):
    if bucket is None:
        return ["", "", "0"]
    return [dio.fmt_float(bucket.mean), dio.fmt_float(bucket.std), str(bucket.n_pairs)]


def cmd_analyze(args) -> int:
    manifest = dio.RunManifest(
        command="analyze",
        config={
            "logits_a": str(args.logits_a),
            "logits_b": str(args.logits_b),
            "k": args.k,
            "tau": args.tau,
            "kendall_convention": args.kendall_convention,
            "exclude_gt": args.exclude_gt,
        },
    )
    records_a = dio.read_logits_csv(args.logits_a)
    records_b = dio.read_logits_csv(args.logits_b)
    report = compare_teachers(
        records_a,
        records_b,
        k=args.k,
        tau=args.tau,
        exclude_gt=args.exclude_gt,
    )
    out_dir = Path(args.out_dir)
    dio.write_affinity_report(out_dir, report)
    # headline alias for the chosen convention
    summary_path = out_dir / "summary.json"
    summary = json.loads(summary_path.read_text())
    key = "kendall_signed" if args.kendall_convention == "signed" else "kendall_paper"
    summary["kendall"] = summary["aggregates"][key]
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    manifest.add_input(args.logits_a)
    manifest.add_input(args.logits_b)
    manifest.write(out_dir / "manifest.json")
    return 0


def cmd_scale(args) -> int:
    policy = parse_policy(args.policy)
    manifest = dio.RunManifest(
        command="scale",
        config={"logits": str(args.logits), "policy": policy.descriptor()},
    )
    records = dio.read_logits_csv(args.logits)
    logits = np.stack([r.logits for r in records])
    labels = np.array([r.label for r in records])
    probs, tau_star = policy_rows(logits, labels, policy)
    dio.write_probs_csv(
        args.out, [r.sample_id for r in records], labels, probs, tau_star=tau_star
    )
    manifest.add_input(args.logits)
    manifest.write(Path(args.out).with_suffix(".manifest.json"))
    return 0


def cmd_angles(args) -> int:
    manifest = dio.RunManifest(
        command="angles",
        config={"features": str(args.features), "cap": args.cap, "seed": args.seed},
    )
    records = dio.read_features_csv(args.features)
    stats = class_angle_stats(records, args.cap, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "angles.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [
                "within_mean_deg", "within_std_deg", "within_pairs",
                "between_mean_deg", "between_std_deg", "between_pairs",
            ]
        )
        w.writerow(_angle_row(stats.within) + _angle_row(stats.between))
    manifest.add_input(args.features)
    manifest.write(out_dir / "manifest.json")
    return 0


def _load_lab_config(path):
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(str(exc), path=path) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc}", path=path) from exc
    try:
        task_spec = GroupTaskSpec(**raw.get("task", {}))
        train = TrainConfig(**raw.get("train", {}))
    except TypeError as exc:
        raise UsageError(f"bad lab config: {exc}") from exc
    return raw, task_spec, train


def _export_teacher_dumps(out_dir, report, task):
    from .geometry import FeatureRecord
    from .probability import LogitRecord

    for width, logits in report.logits.items():
        dio.write_logits_csv(
            out_dir / f"logits_w{width}.csv",
            [
                LogitRecord(sample_id=str(i), label=int(task.y_train[i]),
                            logits=logits[i])
                for i in range(task.y_train.size)
            ],
        )
    for width, feats in report.features.items():
        dio.write_features_csv(
            out_dir / f"features_w{width}.csv",
            [
                FeatureRecord(sample_id=str(i), label=int(task.y_test[i]),
                              features=feats[i])
                for i in range(task.y_test.size)
            ],
        )


def cmd_lab_observe(args) -> int:
    raw, task_spec, train = _load_lab_config(args.config)
    capacities = raw.get("capacities", [16, 64, 256])
    manifest = dio.RunManifest(command="lab observe", config=raw)
    task = generate_group_task(task_spec)
    report = run_observation_suite(
        task,
        capacities,
        train,
        tau_eval=raw.get("tau_eval", 4.0),
        k=raw.get("k", 5),
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "per_capacity.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [
                "width", "n_params", "train_accuracy", "test_accuracy",
                "mean_std_q", "rule_kendall", "rule_kendall_per_sample",
                "rule_peer_std",
                "within_mean_deg", "within_std_deg", "within_pairs",
                "between_mean_deg", "between_std_deg", "between_pairs",
            ]
        )
        for t in report.per_capacity:
            w.writerow(
                [str(t.width), str(t.n_params)]
                + [dio.fmt_float(v) for v in (
                    t.train_accuracy, t.test_accuracy, t.mean_std_q,
                    t.rule_kendall, t.rule_kendall_per_sample,
                    t.rule_peer_std)]
                + _angle_row(t.angles.within)
                + _angle_row(t.angles.between)
            )
    with open(out_dir / "pairwise.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["width_a", "width_b", "spearman", "kendall", "overlap"])
        for p in report.pairwise:
            w.writerow(
                [str(p.width_a), str(p.width_b)]
                + [dio.fmt_float(v) for v in (p.spearman, p.kendall, p.overlap)]
            )
    with open(out_dir / "summary.json", "w", encoding="utf-8", newline="") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _export_teacher_dumps(out_dir, report, task)
    manifest.add_input(args.config)
    manifest.write(out_dir / "manifest.json")
    return 0


def cmd_lab_mismatch(args) -> int:
    raw, task_spec, train = _load_lab_config(args.config)
    manifest = dio.RunManifest(command="lab mismatch", config=raw)
    task = generate_group_task(task_spec)
    report = run_mismatch_suite(
        task,
        small_width=raw.get("small_width", 32),
        large_width=raw.get("large_width", 512),
        student_width=raw.get("student_width", 4),
        config=train,
        seeds=raw.get("seeds", [0, 1, 2, 3, 4]),
        fgcr_alpha=raw.get("fgcr_alpha", 0.5),
        regt_beta=raw.get("regt_beta"),
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "cells.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["cell"]
            + [f"seed_{s}" for s in report.seeds]
            + ["median", "iqr"]
        )
        medians, spreads = report.medians(), report.spreads()
        for name, vals in report.cells.items():
            w.writerow(
                [name]
                + [dio.fmt_float(v) for v in vals]
                + [dio.fmt_float(medians[name]), dio.fmt_float(spreads[name])]
            )
    with open(out_dir / "summary.json", "w", encoding="utf-8", newline="") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.add_input(args.config)
    manifest.write(out_dir / "manifest.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distillab",
        description="Teacher-logit analysis and capacity-aware distillation lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="affinity metrics between two logit dumps")
    p.add_argument("logits_a")
    p.add_argument("logits_b")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--tau", type=float, default=4.0)
    p.add_argument(
        "--kendall-convention", choices=("signed", "paper"), default="signed"
    )
    p.add_argument("--exclude-gt", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scale", help="apply a softening policy to a logit dump")
    p.add_argument("--logits", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("angles", help="within/between-class feature angles")
    p.add_argument("--features", required=True)
    p.add_argument("--cap", type=int, default=DEFAULT_PAIR_CAP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_angles)

    p = sub.add_parser("lab", help="desk-scale experiment suites")
    lab_sub = p.add_subparsers(dest="lab_command", required=True)
    for name, func in (("observe", cmd_lab_observe), ("mismatch", cmd_lab_mismatch)):
        q = lab_sub.add_parser(name)
        q.add_argument("--config", required=True)
        q.add_argument("--out-dir", required=True)
        q.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DistillabError as exc:
        print(f"distillab: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
