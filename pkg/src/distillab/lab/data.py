"""Synthetic group-classification task: fine classes nested in
superclasses, with derivable ground-truth affinity rules.

Superclass centers are isotropic Gaussian draws at a large scale; fine
centers are superclass centers plus smaller-scale offsets; samples are
fine centers plus noise. Each fine class's rule orders its same-superclass
siblings by ascending center distance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..affinity import AffinityRule
from ..errors import ConfigError


@dataclass(frozen=True)
class GroupTaskSpec:
    n_superclasses: int = 4
    n_fine_per_super: int = 4
    input_dim: int = 16
    super_center_scale: float = 4.0
    fine_center_scale: float = 1.5
    noise_std: float = 2.0
    n_train_per_class: int = 400
    n_test_per_class: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.n_superclasses < 2 or self.n_fine_per_super < 2:
            raise ConfigError("need >= 2 superclasses and >= 2 fine classes each")
        if self.input_dim < 2:
            raise ConfigError("input_dim must be >= 2")
        if not 0.0 < self.fine_center_scale < self.super_center_scale:
            raise ConfigError(
                "fine_center_scale must be positive and below super_center_scale"
            )
        if self.noise_std <= 0.0:
            raise ConfigError("noise_std must be positive")
        if self.n_train_per_class < 1 or self.n_test_per_class < 1:
            raise ConfigError("per-class sample counts must be positive")

    @property
    def num_classes(self) -> int:
        return self.n_superclasses * self.n_fine_per_super


@dataclass
class GroupTask:
    spec: GroupTaskSpec
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    centers: np.ndarray  # (C, D) fine-class centers
    superclass_of: np.ndarray  # (C,)
    rules: list[AffinityRule] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return self.spec.num_classes


def _sample_split(rng, centers, superclass_of, n_per_class, noise_std):
    xs, ys = [], []
    for c, center in enumerate(centers):
        xs.append(center + noise_std * rng.standard_normal((n_per_class, center.size)))
        ys.append(np.full(n_per_class, c, dtype=np.int64))
    return np.concatenate(xs), np.concatenate(ys)


def derive_rules(centers: np.ndarray, superclass_of: np.ndarray) -> list[AffinityRule]:
    """One rule per fine class: same-superclass siblings ordered by
    ascending distance from the class center."""
    rules = []
    for c in range(centers.shape[0]):
        siblings = np.flatnonzero(
            (superclass_of == superclass_of[c]) & (np.arange(len(superclass_of)) != c)
        )
        dists = np.linalg.norm(centers[siblings] - centers[c], axis=1)
        order = siblings[np.argsort(dists, kind="stable")]
        rules.append(AffinityRule(target=c, ordered_peers=tuple(order.tolist())))
    return rules


def generate_group_task(spec: GroupTaskSpec) -> GroupTask:
    """Deterministic dataset generation seeded by ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    d = spec.input_dim
    super_centers = spec.super_center_scale * rng.standard_normal(
        (spec.n_superclasses, d)
    )
    offsets = spec.fine_center_scale * rng.standard_normal(
        (spec.n_superclasses, spec.n_fine_per_super, d)
    )
    centers = (super_centers[:, None, :] + offsets).reshape(-1, d)
    superclass_of = np.repeat(np.arange(spec.n_superclasses), spec.n_fine_per_super)

    x_train, y_train = _sample_split(
        rng, centers, superclass_of, spec.n_train_per_class, spec.noise_std
    )
    x_test, y_test = _sample_split(
        rng, centers, superclass_of, spec.n_test_per_class, spec.noise_std
    )
    # normalize to unit center scale so default learning rates are stable;
    # a global rescale leaves the class geometry (and the rules) intact
    scale = 1.0 / spec.super_center_scale
    centers = centers * scale
    x_train = x_train * scale
    x_test = x_test * scale
    return GroupTask(
        spec=spec,
        x_train=x_train,
        y_train=y_train,
        x_test=x_test,
        y_test=y_test,
        centers=centers,
        superclass_of=superclass_of,
        rules=derive_rules(centers, superclass_of),
    )
