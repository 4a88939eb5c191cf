"""Experiment drivers: the capacity-observation suite (dispersion trend,
cross-teacher consistency, feature angles, rule consistency) and the
capacity-mismatch suite (student accuracy per remedy cell).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .. import _kernels
from ..adjust import default_tau0
from ..affinity import top_k_set
from ..errors import ConfigError
from ..geometry import AngleStats, FeatureRecord, class_angle_stats
from ..policies import TemperaturePolicy
from ..probability import non_gt_std_rows, softmax_rows
from .data import GroupTask
from .mlp import MlpModel
from .train import TrainConfig, distill, train_teacher


def _spearman_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    def ranks(m):
        order = np.argsort(m, axis=1, kind="stable")
        r = np.empty_like(m)
        np.put_along_axis(r, order, np.arange(m.shape[1], dtype=np.float64), axis=1)
        return r

    ra, rb = ranks(a), ranks(b)
    ra -= ra.mean(axis=1, keepdims=True)
    rb -= rb.mean(axis=1, keepdims=True)
    denom = np.sqrt((ra**2).sum(axis=1) * (rb**2).sum(axis=1))
    return (ra * rb).sum(axis=1) / denom


def _overlap_rows(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    out = np.empty(a.shape[0])
    for i in range(a.shape[0]):
        inter = np.intersect1d(top_k_set(a[i], k), top_k_set(b[i], k)).size
        out[i] = inter / k
    return out


def rule_consistency_stats(
    task: GroupTask, probs: np.ndarray
) -> tuple[float, float, float]:
    """Consistency of the probabilities with the task's ground-truth rules.

    Returns (rule_kendall, per_sample_kendall, peer_std): the first is the
    per-rule signed Kendall of each class's *mean* probability vector
    (rules describe class-level affinity, so they are checked against the
    averaged prediction); the second is the mean of per-sample Kendalls,
    which is noisier since individual draws can legitimately sit closer to
    a farther sibling; the third is the mean peer-probability std.
    """
    rule_taus, sample_taus, stds = [], [], []
    for rule in task.rules:
        idx = np.flatnonzero(task.y_train == rule.target)
        if idx.size == 0:
            continue
        peers = np.asarray(rule.ordered_peers)
        peer_probs = probs[idx][:, peers]
        implied = np.arange(peers.size, 0, -1, dtype=np.float64)
        rule_taus.append(
            float(
                _kernels.kendall_signed_many(
                    implied[None, :], peer_probs.mean(axis=0)[None, :]
                )[0]
            )
        )
        tiled = np.tile(implied, (idx.size, 1))
        sample_taus.append(_kernels.kendall_signed_many(tiled, peer_probs))
        stds.append(np.std(peer_probs, axis=1))
    return (
        float(np.mean(rule_taus)),
        float(np.mean(np.concatenate(sample_taus))),
        float(np.mean(np.concatenate(stds))),
    )


@dataclass
class TeacherSummary:
    width: int
    n_params: int
    train_accuracy: float
    test_accuracy: float
    mean_std_q: float
    rule_kendall: float
    rule_kendall_per_sample: float
    rule_peer_std: float
    angles: AngleStats


@dataclass
class PairSummary:
    width_a: int
    width_b: int
    spearman: float
    kendall: float
    overlap: float


@dataclass
class ObservationReport:
    tau_eval: float
    k: int
    seed: int
    per_capacity: list[TeacherSummary]
    pairwise: list[PairSummary]
    logits: dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    features: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "tau_eval": self.tau_eval,
            "k": self.k,
            "seed": self.seed,
            "per_capacity": [asdict(t) for t in self.per_capacity],
            "pairwise": [asdict(p) for p in self.pairwise],
        }


FEATURE_DIM = 32


def teacher_widths(width: int) -> tuple[int, int]:
    """Capacity knob -> (width, FEATURE_DIM). The feature layer is held
    fixed so angle statistics stay comparable across capacities."""
    return (width, FEATURE_DIM)


def run_observation_suite(
    task: GroupTask,
    capacities: list[int],
    config: TrainConfig,
    tau_eval: float = 4.0,
    k: int = 5,
    angle_pair_cap: int = 200_000,
) -> ObservationReport:
    """Train one teacher per capacity and report the dispersion,
    consistency, angle, and rule statistics across them."""
    if len(capacities) < 1:
        raise ConfigError("need at least one capacity")
    k = min(k, task.num_classes)
    summaries, logits_by_w, feats_by_w = [], {}, {}
    for width in capacities:
        result = train_teacher(task, teacher_widths(width), config)
        logits, _ = result.model.forward(task.x_train)
        _, test_feats = result.model.forward(task.x_test)
        probs = softmax_rows(logits, tau_eval)
        mean_std_q = float(np.mean(non_gt_std_rows(probs, task.y_train)))
        rule_tau, rule_tau_sample, rule_std = rule_consistency_stats(task, probs)
        angle_records = [
            FeatureRecord(sample_id=str(i), label=int(task.y_test[i]),
                          features=test_feats[i])
            for i in range(task.y_test.size)
        ]
        angles = class_angle_stats(angle_records, angle_pair_cap, seed=config.seed)
        summaries.append(
            TeacherSummary(
                width=width,
                n_params=result.model.num_params,
                train_accuracy=result.train_accuracy,
                test_accuracy=result.test_accuracy,
                mean_std_q=mean_std_q,
                rule_kendall=rule_tau,
                rule_kendall_per_sample=rule_tau_sample,
                rule_peer_std=rule_std,
                angles=angles,
            )
        )
        logits_by_w[width] = logits
        feats_by_w[width] = test_feats

    pairwise = []
    for i in range(len(capacities)):
        for j in range(i + 1, len(capacities)):
            wa, wb = capacities[i], capacities[j]
            fa, fb = logits_by_w[wa], logits_by_w[wb]
            pairwise.append(
                PairSummary(
                    width_a=wa,
                    width_b=wb,
                    spearman=float(np.mean(_spearman_rows(fa, fb))),
                    kendall=float(np.mean(_kernels.kendall_signed_many(fa, fb))),
                    overlap=float(np.mean(_overlap_rows(fa, fb, k))),
                )
            )
    return ObservationReport(
        tau_eval=tau_eval,
        k=k,
        seed=config.seed,
        per_capacity=summaries,
        pairwise=pairwise,
        logits=logits_by_w,
        features=feats_by_w,
    )


@dataclass
class MismatchReport:
    seeds: list[int]
    cells: dict[str, list[float]]  # cell -> student test accuracy per seed
    teacher_std_q: dict[str, list[float]]  # plain/regt large teacher per seed
    teacher_accuracy: dict[str, list[float]]

    def medians(self) -> dict[str, float]:
        return {name: float(np.median(v)) for name, v in self.cells.items()}

    def spreads(self) -> dict[str, float]:
        out = {}
        for name, v in self.cells.items():
            q75, q25 = np.percentile(v, [75, 25])
            out[name] = float(q75 - q25)
        return out

    def to_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "cells": self.cells,
            "medians": self.medians(),
            "spreads": self.spreads(),
            "teacher_std_q": self.teacher_std_q,
            "teacher_accuracy": self.teacher_accuracy,
        }


def run_mismatch_suite(
    task: GroupTask,
    small_width: int,
    large_width: int,
    student_width: int,
    config: TrainConfig,
    seeds: list[int],
    fgcr_alpha: float = 0.5,
    regt_beta: float | None = None,
    tau_eval: float = 4.0,
) -> MismatchReport:
    """Per seed: an unassisted student, a small-teacher baseline, and the
    large teacher under every remedy; plus the dispersion comparison of a
    plain vs regularized large teacher.

    ``regt_beta`` defaults to 0.1: at desk scale the teacher logits are
    small, so a stronger penalty is needed for the regularizer to raise
    non-ground-truth dispersion measurably above the plain teacher.
    """
    if small_width >= large_width:
        raise ConfigError("small_width must be below large_width")
    if len(seeds) < 1:
        raise ConfigError("need at least one seed")
    regt_beta = 0.1 if regt_beta is None else regt_beta
    tau = config.tau
    policies = {
        "ts": TemperaturePolicy.ts(tau),
        "ats": TemperaturePolicy.ats(tau + 1.0, tau),
        "isats": TemperaturePolicy.isats(),
    }
    cells: dict[str, list[float]] = {
        name: []
        for name in (
            "nokd",
            "kd_small_ts",
            "kd_large_ts",
            "kd_large_ats",
            "kd_large_isats",
            "kd_large_fgcr",
            "kd_large_regt",
        )
    }
    teacher_std_q = {"plain": [], "regt": []}
    teacher_accuracy = {"small": [], "large": [], "regt": []}
    student = teacher_widths(student_width)

    for seed in seeds:
        cfg = replace(config, seed=seed)
        small = train_teacher(task, teacher_widths(small_width), cfg)
        large = train_teacher(task, teacher_widths(large_width), cfg)
        regt = train_teacher(
            task, teacher_widths(large_width), cfg, regt_beta=regt_beta
        )
        teacher_accuracy["small"].append(small.test_accuracy)
        teacher_accuracy["large"].append(large.test_accuracy)
        teacher_accuracy["regt"].append(regt.test_accuracy)
        for name, model in (("plain", large.model), ("regt", regt.model)):
            logits, _ = model.forward(task.x_train)
            probs = softmax_rows(logits, tau_eval)
            teacher_std_q[name].append(
                float(np.mean(non_gt_std_rows(probs, task.y_train)))
            )

        nokd = train_teacher(task, student, cfg)
        cells["nokd"].append(nokd.test_accuracy)
        cells["kd_small_ts"].append(
            distill(small.model, student, task, cfg, policies["ts"]).test_accuracy
        )
        cells["kd_large_ts"].append(
            distill(large.model, student, task, cfg, policies["ts"]).test_accuracy
        )
        cells["kd_large_ats"].append(
            distill(large.model, student, task, cfg, policies["ats"]).test_accuracy
        )
        cells["kd_large_isats"].append(
            distill(large.model, student, task, cfg, policies["isats"]).test_accuracy
        )
        cells["kd_large_fgcr"].append(
            distill(
                large.model,
                student,
                task,
                cfg,
                policies["ts"],
                fgcr=(fgcr_alpha, default_tau0(tau)),
            ).test_accuracy
        )
        cells["kd_large_regt"].append(
            distill(regt.model, student, task, cfg, policies["ts"]).test_accuracy
        )
    return MismatchReport(
        seeds=list(seeds),
        cells=cells,
        teacher_std_q=teacher_std_q,
        teacher_accuracy=teacher_accuracy,
    )
