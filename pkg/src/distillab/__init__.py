"""distillab: quantify the structure of teacher logits (non-ground-truth
dispersion, cross-teacher rank consistency) and apply capacity-mismatch
remedies (class-prior fusion, teacher regularization, asymmetric and
instance-specific temperature scaling), with a built-in desk-scale
teacher/student training lab."""

from ._kernels import USING_EXTENSION
from .adjust import ClassPrior, build_class_priors, fgcr_fuse, regt_penalty
from .affinity import (
    AffinityReport,
    AffinityRule,
    compare_teachers,
    kendall,
    overlap_histogram,
    rule_consistency,
    set_overlap,
    spearman,
)
from .geometry import FeatureRecord, class_angle_stats, feature_angle
from .policies import (
    TemperaturePolicy,
    apply_ats,
    apply_isats,
    apply_policy,
    apply_ts,
    find_instance_temperature,
    parse_policy,
)
from .probability import (
    LogitRecord,
    NonGtView,
    ProbabilityVector,
    dispersion,
    soften,
    split_gt,
)

__version__ = "0.1.0"

__all__ = [
    "USING_EXTENSION",
    "ClassPrior",
    "build_class_priors",
    "fgcr_fuse",
    "regt_penalty",
    "AffinityReport",
    "AffinityRule",
    "compare_teachers",
    "kendall",
    "overlap_histogram",
    "rule_consistency",
    "set_overlap",
    "spearman",
    "FeatureRecord",
    "class_angle_stats",
    "feature_angle",
    "TemperaturePolicy",
    "apply_ts",
    "apply_ats",
    "apply_isats",
    "apply_policy",
    "find_instance_temperature",
    "parse_policy",
    "LogitRecord",
    "NonGtView",
    "ProbabilityVector",
    "dispersion",
    "soften",
    "split_gt",
]
