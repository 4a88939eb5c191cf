"""Cross-teacher consistency statistics: top-K set overlap, Spearman and
Kendall rank correlations, overlap histograms, and rule-based consistency.

All metrics depend only on the relative order of logits, never on their
absolute values. Kendall has two conventions:

* ``signed`` (default): the pair term is sign(d1) * sign(d2), giving the
  standard statistic in [-1, 1].
* ``paper``: the pair term is a 1/0 step on both differences being
  positive. This variant is order-dependent and cannot reach 1 in
  general; it is kept for fidelity, not corrected.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError, InputError
from .probability import LogitRecord, ProbabilityVector, dispersion


def _pair(f1, f2):
    a = np.asarray(f1, dtype=np.float64)
    b = np.asarray(f2, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.size != b.size:
        raise InputError(
            f"expected two equal-length vectors, got shapes {a.shape}, {b.shape}"
        )
    return a, b


def top_k_set(f: np.ndarray, k: int) -> np.ndarray:
    """Indices of the K largest entries; ties broken by ascending index."""
    order = np.lexsort((np.arange(f.size), -f))
    return order[:k]


def set_overlap(f1, f2, k: int) -> tuple[float, int]:
    """Top-K set overlap ratio between two logit vectors."""
    a, b = _pair(f1, f2)
    if not 1 <= k <= a.size:
        raise ConfigError(f"K={k} must lie in [1, {a.size}]")
    inter = np.intersect1d(top_k_set(a, k), top_k_set(b, k)).size
    return inter / k, int(inter)


def rank_vector(f: np.ndarray) -> np.ndarray:
    """Rank of each class = its position in the ascending sort of the
    vector; ties broken by ascending class index (stable sort)."""
    order = np.argsort(f, kind="stable")
    ranks = np.empty(f.size, dtype=np.float64)
    ranks[order] = np.arange(f.size)
    return ranks


def spearman(f1, f2) -> float:
    """Pearson correlation of the two rank vectors."""
    a, b = _pair(f1, f2)
    if a.size < 2:
        raise DomainError("spearman needs at least 2 classes")
    ra, rb = rank_vector(a), rank_vector(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = np.sqrt((ra**2).sum() * (rb**2).sum())
    return float((ra * rb).sum() / denom)


def kendall(f1, f2, signed: bool = True) -> float:
    """Kendall tau between two logit vectors (see module docstring for
    the two conventions)."""
    a, b = _pair(f1, f2)
    if a.size < 2:
        raise DomainError("kendall needs at least 2 classes")
    fn = _kernels.kendall_signed_many if signed else _kernels.kendall_paper_many
    return float(fn(a[None, :], b[None, :])[0])


@dataclass(frozen=True)
class AffinityRule:
    """A prescribed affinity ordering: p[target] > p[peers[0]] > ..."""

    target: int
    ordered_peers: tuple[int, ...]

    def __post_init__(self):
        peers = tuple(int(p) for p in self.ordered_peers)
        object.__setattr__(self, "ordered_peers", peers)
        if len(set(peers)) != len(peers):
            raise InputError("rule peers must be distinct")
        if self.target in peers:
            raise InputError("rule target cannot appear among its peers")
        if len(peers) < 2:
            raise InputError("rule needs at least 2 peers")


def rule_consistency(
    record: LogitRecord, probs: ProbabilityVector, rule: AffinityRule
) -> tuple[float, float]:
    """Signed Kendall tau between a rule's implied peer order and the
    network's peer probabilities, plus the population std of those
    probabilities."""
    if record.label != rule.target:
        raise InputError(
            f"record label {record.label} does not match rule target {rule.target}"
        )
    peers = np.asarray(rule.ordered_peers)
    if peers.max() >= probs.num_classes:
        raise InputError(f"rule peer {peers.max()} out of range")
    peer_probs = probs.probs[peers]
    # descending implied order: score len(peers)..1
    implied = np.arange(len(peers), 0, -1, dtype=np.float64)
    tau = kendall(implied, peer_probs, signed=True)
    _, std = dispersion(peer_probs)
    return tau, std


@dataclass
class AffinityReport:
    """Per-sample and aggregated consistency statistics for two aligned
    logit collections."""

    k: int
    sample_ids: list[str]
    overlap_ratio: np.ndarray
    spearman: np.ndarray
    kendall_signed: np.ndarray
    kendall_paper: np.ndarray
    non_gt_std_a: np.ndarray
    non_gt_std_b: np.ndarray
    overlap_histogram: dict[int, list[int]] = field(default_factory=dict)

    @property
    def aggregates(self) -> dict[str, dict[str, float]]:
        out = {}
        for name in (
            "overlap_ratio",
            "spearman",
            "kendall_signed",
            "kendall_paper",
            "non_gt_std_a",
            "non_gt_std_b",
        ):
            vals = getattr(self, name)
            out[name] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
        return out


def align_records(
    records_a: list[LogitRecord], records_b: list[LogitRecord]
) -> list[tuple[LogitRecord, LogitRecord]]:
    """Pair two collections by sample_id, in the first collection's order.

    A mismatch reports the first 5 offending ids.
    """
    by_id = {r.sample_id: r for r in records_b}
    missing = [r.sample_id for r in records_a if r.sample_id not in by_id]
    extra = [r.sample_id for r in records_b if r.sample_id not in {
        a.sample_id for a in records_a}]
    offenders = (missing + extra)[:5]
    if offenders or len(records_a) != len(records_b):
        raise InputError(
            f"sample ids are not aligned; first offenders: {offenders}"
        )
    return [(r, by_id[r.sample_id]) for r in records_a]


def overlap_histogram(
    records_a: list[LogitRecord], records_b: list[LogitRecord], k_max: int
) -> dict[int, list[int]]:
    """For each K in 1..k_max, the distribution over samples of the top-K
    intersection size (index m of each list = #samples with |inter| = m)."""
    pairs = align_records(records_a, records_b)
    if not pairs:
        raise InputError("no samples to histogram")
    c = pairs[0][0].num_classes
    if not 1 <= k_max <= c:
        raise ConfigError(f"K_max={k_max} must lie in [1, {c}]")
    hist = {}
    for k in range(1, k_max + 1):
        counts = [0] * (k + 1)
        for ra, rb in pairs:
            _, inter = set_overlap(ra.logits, rb.logits, k)
            counts[inter] += 1
        hist[k] = counts
    return hist


def compare_teachers(
    records_a: list[LogitRecord],
    records_b: list[LogitRecord],
    k: int,
    tau: float = 4.0,
    exclude_gt: bool = False,
    k_max_histogram: int | None = None,
) -> AffinityReport:
    """Full per-sample affinity comparison of two aligned logit dumps.

    ``tau`` only affects the non-ground-truth std columns (rank metrics
    are temperature-invariant). With ``exclude_gt`` the rank metrics are
    computed on the non-ground-truth subvectors.
    """
    from .probability import non_gt_rows, softmax_rows

    pairs = align_records(records_a, records_b)
    if not pairs:
        raise InputError("no samples to compare")
    fa = np.stack([p[0].logits for p in pairs])
    fb = np.stack([p[1].logits for p in pairs])
    labels_a = np.array([p[0].label for p in pairs])
    labels_b = np.array([p[1].label for p in pairs])
    ids = [p[0].sample_id for p in pairs]

    metric_a, metric_b = fa, fb
    if exclude_gt:
        if not np.array_equal(labels_a, labels_b):
            raise InputError("exclude-gt requires matching labels per sample")
        metric_a = non_gt_rows(fa, labels_a)
        metric_b = non_gt_rows(fb, labels_b)

    overlap = np.array(
        [set_overlap(a, b, k)[0] for a, b in zip(metric_a, metric_b)]
    )
    rho = np.array([spearman(a, b) for a, b in zip(metric_a, metric_b)])
    tau_signed = _kernels.kendall_signed_many(metric_a, metric_b)
    tau_paper = _kernels.kendall_paper_many(metric_a, metric_b)

    from .probability import non_gt_std_rows

    std_a = non_gt_std_rows(softmax_rows(fa, tau), labels_a)
    std_b = non_gt_std_rows(softmax_rows(fb, tau), labels_b)

    hist = overlap_histogram(
        [p[0] for p in pairs], [p[1] for p in pairs], k_max_histogram or k
    )
    return AffinityReport(
        k=k,
        sample_ids=ids,
        overlap_ratio=overlap,
        spearman=rho,
        kendall_signed=np.asarray(tau_signed),
        kendall_paper=np.asarray(tau_paper),
        non_gt_std_a=std_a,
        non_gt_std_b=std_b,
        overlap_histogram=hist,
    )
