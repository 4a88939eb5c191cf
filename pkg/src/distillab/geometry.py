"""Pairwise feature-angle analysis.

Naming note: pairs with the *same* label form the "within" bucket and
pairs with *different* labels the "between" bucket. (Some sources invert
the inter-/intra- terminology; this module does not.)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

DEFAULT_PAIR_CAP = 200_000


@dataclass(frozen=True)
class FeatureRecord:
    """One sample's penultimate-layer feature vector."""

    sample_id: str
    label: int
    features: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        if feats.ndim != 1 or feats.size < 2:
            raise InputError("features must be a vector of length >= 2")
        if not np.all(np.isfinite(feats)):
            raise InputError(f"non-finite feature in sample {self.sample_id!r}")
        if np.linalg.norm(feats) == 0.0:
            raise InputError(f"zero-norm feature vector in sample {self.sample_id!r}")


@dataclass(frozen=True)
class AngleBucket:
    mean: float
    std: float
    n_pairs: int


@dataclass(frozen=True)
class AngleStats:
    """Within-/between-class angle aggregates; a bucket with no pairs is
    absent (None)."""

    within: AngleBucket | None
    between: AngleBucket | None


def feature_angle(h1, h2) -> float:
    """Angle between two feature vectors in degrees, in [0, 180]."""
    a = np.asarray(h1, dtype=np.float64)
    b = np.asarray(h2, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise InputError("zero-norm vector has no angle")
    cos = np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0)
    return float(np.degrees(np.arccos(cos)))


def _bucket_stats(units, i_idx, j_idx, cap, rng):
    n_pairs = i_idx.size
    if n_pairs == 0:
        return None
    if n_pairs > cap:
        pick = rng.choice(n_pairs, size=cap, replace=False)
        pick.sort()
        i_idx, j_idx = i_idx[pick], j_idx[pick]
    cos = np.clip(np.einsum("ij,ij->i", units[i_idx], units[j_idx]), -1.0, 1.0)
    angles = np.degrees(np.arccos(cos))
    return AngleBucket(
        mean=float(angles.mean()), std=float(angles.std()), n_pairs=i_idx.size
    )


def class_angle_stats(
    records: list[FeatureRecord],
    max_pairs_per_bucket: int = DEFAULT_PAIR_CAP,
    seed: int = 0,
) -> AngleStats:
    """Mean/std of pairwise angles over same-label and different-label
    pairs, uniformly subsampled per bucket (without replacement) beyond
    the cap. Deterministic given (records, cap, seed)."""
    if len(records) < 2:
        raise InputError("need at least 2 records")
    if max_pairs_per_bucket < 1:
        raise InputError("pair cap must be positive")
    feats = np.stack([r.features for r in records])
    labels = np.array([r.label for r in records])
    units = feats / np.linalg.norm(feats, axis=1, keepdims=True)

    i_idx, j_idx = np.triu_indices(len(records), 1)
    same = labels[i_idx] == labels[j_idx]
    rng = np.random.default_rng(seed)
    # within bucket sampled first so either bucket's draw is seed-stable
    within = _bucket_stats(
        units, i_idx[same], j_idx[same], max_pairs_per_bucket, rng
    )
    between = _bucket_stats(
        units, i_idx[~same], j_idx[~same], max_pairs_per_bucket,
        np.random.default_rng(seed + 1),
    )
    return AngleStats(within=within, between=between)
