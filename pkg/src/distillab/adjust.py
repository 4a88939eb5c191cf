"""Non-temperature remedies for over-confident teachers: class-prior
fusion (post-hoc) and the regularized-teacher penalty (train-time).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError
from .probability import (
    LogitRecord,
    ProbabilityVector,
    dispersion,
    soften,
    split_gt,
)


@dataclass(frozen=True)
class ClassPrior:
    """Mean softened probability vector over one class's training samples."""

    class_index: int
    mean_probs: np.ndarray
    count: int
    tau0: float

    def __post_init__(self):
        probs = np.asarray(self.mean_probs, dtype=np.float64)
        object.__setattr__(self, "mean_probs", probs)
        if self.count < 1:
            raise InputError("prior needs at least one sample")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise InputError("class prior is not on the simplex")


def default_tau0(tau: float) -> float:
    """Prior-building temperature: tau - 1, floored at 1."""
    return max(tau - 1.0, 1.0)


def build_class_priors(
    records: list[LogitRecord], tau0: float
) -> dict[int, ClassPrior]:
    """Per-class arithmetic mean of softened probabilities at tau0.

    Every class in [0, C) must be represented; a missing class is a
    ConfigError naming it.
    """
    if not records:
        raise ConfigError("cannot build priors from zero records")
    num_classes = records[0].num_classes
    sums = np.zeros((num_classes, num_classes))
    counts = np.zeros(num_classes, dtype=np.int64)
    for rec in records:
        if rec.num_classes != num_classes:
            raise InputError(
                f"sample {rec.sample_id!r} has {rec.num_classes} classes, "
                f"expected {num_classes}"
            )
        sums[rec.label] += soften(rec.logits, tau0).probs
        counts[rec.label] += 1
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise ConfigError(
            f"no records for class(es) {missing.tolist()}; "
            "every class needs at least one sample"
        )
    return {
        c: ClassPrior(
            class_index=c,
            mean_probs=sums[c] / counts[c],
            count=int(counts[c]),
            tau0=tau0,
        )
        for c in range(num_classes)
    }


def fgcr_fuse(
    record: LogitRecord, prior: ClassPrior, tau: float, alpha: float
) -> ProbabilityVector:
    """Convex combination of the record's softened vector at tau with its
    class prior: (1 - alpha) * p + alpha * prior."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha!r}")
    if prior.class_index != record.label:
        raise InputError(
            f"prior is for class {prior.class_index}, record label is "
            f"{record.label}"
        )
    p = soften(record.logits, tau).probs
    fused = (1.0 - alpha) * p + alpha * prior.mean_probs
    return ProbabilityVector(
        probs=fused,
        policy=f"fgcr:ts:{tau:g};alpha={alpha:g};tau0={prior.tau0:g}",
    )


def regt_penalty(probs_at_1: ProbabilityVector, label: int) -> float:
    """Teacher regularizer value p_y - std(q), computed at temperature 1.

    The trainer adds this to cross-entropy with coefficient beta; lower is
    better (low ground-truth confidence, dispersed non-ground-truth mass).
    """
    record = LogitRecord(
        sample_id="_", label=label, logits=np.zeros(probs_at_1.num_classes)
    )
    view = split_gt(record, probs_at_1)
    _, std = dispersion(view.non_gt_probs)
    return float(view.gt_prob - std)
