"""Softmax/temperature mathematics and ground-truth splitting.

Everything here is pure and double precision. Variance and standard
deviation are population statistics (divide by n) throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError


def _as_vector(x, name="vector"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class LogitRecord:
    """One sample: identifier, ground-truth class index, raw logit vector."""

    sample_id: str
    label: int
    logits: np.ndarray

    def __post_init__(self):
        logits = _as_vector(self.logits, "logits")
        object.__setattr__(self, "logits", logits)
        if logits.size < 2:
            raise InputError("need at least 2 classes")
        if not np.all(np.isfinite(logits)):
            raise InputError(f"non-finite logit in sample {self.sample_id!r}")
        if not 0 <= self.label < logits.size:
            raise InputError(
                f"label {self.label} out of range for {logits.size} classes"
            )

    @property
    def num_classes(self) -> int:
        return self.logits.size


@dataclass(frozen=True)
class ProbabilityVector:
    """A simplex point plus the policy descriptor that produced it.

    ``tau_star`` carries the per-sample search temperature when the policy
    is instance-specific, else None.
    """

    probs: np.ndarray
    policy: str
    tau_star: float | None = None

    def __post_init__(self):
        probs = _as_vector(self.probs, "probs")
        object.__setattr__(self, "probs", probs)
        if np.any(probs <= 0.0) or np.any(probs >= 1.0):
            raise InputError("probabilities must lie strictly in (0, 1)")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise InputError(f"probabilities sum to {probs.sum()!r}, not 1")

    @property
    def num_classes(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class NonGtView:
    """Ground-truth / non-ground-truth split of one sample's outputs.

    Non-ground-truth entries keep ascending original class order with the
    label position removed.
    """

    gt_prob: float
    non_gt_probs: np.ndarray = field(repr=False)
    gt_logit: float
    non_gt_logits: np.ndarray = field(repr=False)


def softmax_rows(logits: np.ndarray, tau: float = 1.0) -> np.ndarray:
    """Row-wise temperature softmax of a 2-d array (max-subtracted)."""
    z = np.asarray(logits, dtype=np.float64) / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def soften(logits, tau: float, policy: str | None = None) -> ProbabilityVector:
    """Temperature softmax of one logit vector.

    Raises DomainError for non-positive tau and InputError for non-finite
    logits.
    """
    if not np.isfinite(tau) or tau <= 0.0:
        raise DomainError(f"temperature must be positive, got {tau!r}")
    arr = _as_vector(logits, "logits")
    if not np.all(np.isfinite(arr)):
        raise InputError("non-finite logit")
    probs = softmax_rows(arr[None, :], tau)[0]
    return ProbabilityVector(probs=probs, policy=policy or f"ts:{tau:g}")


def split_gt(record: LogitRecord, probs: ProbabilityVector) -> NonGtView:
    """Split a record's logits and probabilities around the label index."""
    if probs.num_classes != record.num_classes:
        raise InputError(
            f"probability length {probs.num_classes} does not match "
            f"{record.num_classes} logits"
        )
    y = record.label
    mask = np.ones(record.num_classes, dtype=bool)
    mask[y] = False
    return NonGtView(
        gt_prob=float(probs.probs[y]),
        non_gt_probs=probs.probs[mask],
        gt_logit=float(record.logits[y]),
        non_gt_logits=record.logits[mask],
    )


def dispersion(values) -> tuple[float, float]:
    """Population variance and standard deviation of a vector.

    A length-1 vector yields (0, 0); an empty vector is an error.
    """
    arr = _as_vector(values, "values")
    if arr.size == 0:
        raise InputError("dispersion of an empty vector is undefined")
    var = float(np.var(arr))
    return var, float(np.sqrt(var))


def non_gt_rows(values: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Drop each row's label column: (N, C) -> (N, C-1), order preserved."""
    values = np.asarray(values, dtype=np.float64)
    n, c = values.shape
    mask = np.ones((n, c), dtype=bool)
    mask[np.arange(n), labels] = False
    return values[mask].reshape(n, c - 1)


def non_gt_std_rows(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-row population std of the non-ground-truth probabilities."""
    return np.std(non_gt_rows(probs, labels), axis=1)
