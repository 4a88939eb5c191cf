"""Softening policies: symmetric (TS), asymmetric (ATS), and the
instance-specific variant (ISATS) that grid-searches a per-sample
temperature maximizing non-ground-truth probability variance.

A policy is expressible as a plain-text descriptor:

    ts:4.0
    ats:5.0,4.0
    isats:1,2,3,4,5,6,8;+1.0

parsed by :func:`parse_policy`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, InputError, UsageError
from .probability import (
    LogitRecord,
    ProbabilityVector,
    non_gt_rows,
    soften,
    softmax_rows,
)

DEFAULT_ISATS_GRID = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0)


@dataclass(frozen=True)
class TemperaturePolicy:
    """One of the three softening policies, with its parameters."""

    kind: str  # "ts" | "ats" | "isats"
    tau: float = 1.0  # TS
    tau1: float = 1.0  # ATS (ground-truth divisor)
    tau2: float = 1.0  # ATS (non-ground-truth divisor)
    grid: tuple[float, ...] = field(default=DEFAULT_ISATS_GRID)  # ISATS
    offset: float = 1.0  # ISATS: tau1 = tau_star + offset

    def __post_init__(self):
        if self.kind not in ("ts", "ats", "isats"):
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if self.kind == "ts" and self.tau <= 0:
            raise ConfigError("ts temperature must be positive")
        if self.kind == "ats" and (self.tau1 <= 0 or self.tau2 <= 0):
            raise ConfigError("ats temperatures must both be positive")
        if self.kind == "isats":
            grid = tuple(float(g) for g in self.grid)
            object.__setattr__(self, "grid", grid)
            if not grid:
                raise ConfigError("isats grid must be non-empty")
            if any(g <= 0 for g in grid):
                raise ConfigError("isats grid entries must be positive")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError("isats grid must be strictly ascending")
            if self.offset < 0:
                raise ConfigError("isats offset must be non-negative")

    @classmethod
    def ts(cls, tau: float) -> "TemperaturePolicy":
        return cls(kind="ts", tau=tau)

    @classmethod
    def ats(cls, tau1: float, tau2: float) -> "TemperaturePolicy":
        return cls(kind="ats", tau1=tau1, tau2=tau2)

    @classmethod
    def isats(cls, grid=DEFAULT_ISATS_GRID, offset: float = 1.0) -> "TemperaturePolicy":
        return cls(kind="isats", grid=tuple(grid), offset=offset)

    def descriptor(self) -> str:
        if self.kind == "ts":
            return f"ts:{self.tau:g}"
        if self.kind == "ats":
            return f"ats:{self.tau1:g},{self.tau2:g}"
        grid = ",".join(f"{g:g}" for g in self.grid)
        return f"isats:{grid};+{self.offset:g}"


def parse_policy(text: str) -> TemperaturePolicy:
    """Parse a policy descriptor; raises UsageError naming the grammar."""
    usage = (
        f"bad policy descriptor {text!r}; expected 'ts:TAU', 'ats:TAU1,TAU2' "
        "or 'isats:G1,G2,...;+OFFSET'"
    )
    try:
        kind, _, rest = text.strip().partition(":")
        if kind == "ts":
            return TemperaturePolicy.ts(float(rest))
        if kind == "ats":
            t1, t2 = rest.split(",")
            return TemperaturePolicy.ats(float(t1), float(t2))
        if kind == "isats":
            if not rest:
                return TemperaturePolicy.isats()
            grid_part, _, off_part = rest.partition(";")
            grid = tuple(float(g) for g in grid_part.split(","))
            offset = float(off_part.lstrip("+")) if off_part else 1.0
            return TemperaturePolicy.isats(grid, offset)
    except (ValueError, ConfigError) as exc:
        raise UsageError(f"{usage} ({exc})") from exc
    raise UsageError(usage)


def apply_ts(record: LogitRecord, tau: float) -> ProbabilityVector:
    """Symmetric temperature scaling."""
    return soften(record.logits, tau, policy=f"ts:{tau:g}")


def ats_rows(
    logits: np.ndarray, labels: np.ndarray, tau1, tau2
) -> np.ndarray:
    """Asymmetric scaling of a batch: ground-truth logit by tau1, the rest
    by tau2, one shared softmax per row. tau1/tau2 may be scalars or
    per-row arrays."""
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[0]
    tau1 = np.broadcast_to(np.asarray(tau1, dtype=np.float64), (n,))
    tau2 = np.broadcast_to(np.asarray(tau2, dtype=np.float64), (n,))
    scaled = logits / tau2[:, None]
    rows = np.arange(n)
    scaled[rows, labels] = logits[rows, labels] / tau1
    return softmax_rows(scaled, 1.0)


def apply_ats(record: LogitRecord, tau1: float, tau2: float) -> ProbabilityVector:
    """Asymmetric temperature scaling of one record."""
    if tau1 <= 0 or tau2 <= 0:
        raise DomainError("temperatures must be positive")
    probs = ats_rows(record.logits[None, :], np.array([record.label]), tau1, tau2)[0]
    return ProbabilityVector(probs=probs, policy=f"ats:{tau1:g},{tau2:g}")


def instance_temperatures(
    logits: np.ndarray, labels: np.ndarray, grid
) -> np.ndarray:
    """Per-row grid temperature maximizing variance of the non-ground-truth
    probabilities under symmetric softening; ties go to the smaller
    temperature."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ConfigError("temperature grid must be non-empty")
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[0]
    variances = np.empty((grid.size, n))
    for k, tau in enumerate(grid):
        q = non_gt_rows(softmax_rows(logits, tau), labels)
        variances[k] = np.var(q, axis=1)
    # argmax returns the first (smallest-tau) index on exact ties
    best = np.argmax(variances, axis=0)
    return grid[best]


def find_instance_temperature(record: LogitRecord, grid) -> float:
    """Grid search for one record's variance-maximizing temperature."""
    taus = instance_temperatures(
        record.logits[None, :], np.array([record.label]), grid
    )
    return float(taus[0])


def apply_isats(
    record: LogitRecord, grid=DEFAULT_ISATS_GRID, offset: float = 1.0
) -> ProbabilityVector:
    """Instance-specific ATS: search tau_star on the grid, then apply
    asymmetric scaling at (tau_star + offset, tau_star)."""
    policy = TemperaturePolicy.isats(grid, offset)
    tau_star = find_instance_temperature(record, policy.grid)
    probs = apply_ats(record, tau_star + offset, tau_star)
    return ProbabilityVector(
        probs=probs.probs, policy=policy.descriptor(), tau_star=tau_star
    )


def apply_policy(record: LogitRecord, policy: TemperaturePolicy) -> ProbabilityVector:
    """Dispatch a record through any policy."""
    if policy.kind == "ts":
        return apply_ts(record, policy.tau)
    if policy.kind == "ats":
        return apply_ats(record, policy.tau1, policy.tau2)
    return apply_isats(record, policy.grid, policy.offset)


def policy_rows(
    logits: np.ndarray, labels: np.ndarray, policy: TemperaturePolicy
) -> tuple[np.ndarray, np.ndarray | None]:
    """Batch form of apply_policy: returns (probs, tau_star or None)."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if np.any(labels < 0) or np.any(labels >= logits.shape[1]):
        raise InputError("label out of range")
    if policy.kind == "ts":
        return softmax_rows(logits, policy.tau), None
    if policy.kind == "ats":
        return ats_rows(logits, labels, policy.tau1, policy.tau2), None
    tau_star = instance_temperatures(logits, labels, policy.grid)
    probs = ats_rows(logits, labels, tau_star + policy.offset, tau_star)
    return probs, tau_star
