"""Training loops: plain/regularized teachers and policy-driven
distillation, all mini-batch SGD with momentum. Loss functions return the
batch-mean value together with its gradient at the logits so the model's
explicit backward pass can finish the chain.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..adjust import build_class_priors
from ..errors import ConfigError, RunError
from ..policies import TemperaturePolicy, policy_rows
from ..probability import LogitRecord, non_gt_rows, softmax_rows
from .data import GroupTask
from .mlp import MlpModel

_STD_EPS = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    batch_size: int = 64
    learning_rate: float = 0.05
    momentum: float = 0.9
    lam: float = 0.5  # KD mixing weight
    tau: float = 4.0  # symmetric KD temperature (TS)
    beta: float = 0.01  # teacher-regularizer coefficient
    weight_decay: float = 0.002
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate < 0:
            raise ConfigError("epochs/batch_size must be positive, lr non-negative")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be non-negative")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lam must lie in [0, 1]")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")


@dataclass
class TrainResult:
    model: MlpModel
    train_accuracy: float
    test_accuracy: float
    final_loss: float


def _log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def ce_loss_grad(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy at temperature 1 and its logit gradient."""
    n = logits.shape[0]
    p = softmax_rows(logits, 1.0)
    logp = _log_softmax_rows(logits)[np.arange(n), labels]
    onehot = np.zeros_like(p)
    onehot[np.arange(n), labels] = 1.0
    return -logp.mean(), (p - onehot) / n


def regt_loss_grad(logits: np.ndarray, labels: np.ndarray, beta: float):
    """Cross-entropy plus beta * (p_y - std(q)) at temperature 1."""
    n, c = logits.shape
    loss, dlogits = ce_loss_grad(logits, labels)
    p = softmax_rows(logits, 1.0)
    rows = np.arange(n)
    q = non_gt_rows(p, labels)
    std = np.std(q, axis=1)
    loss += beta * float(np.mean(p[rows, labels] - std))

    # gradient w.r.t. p, then through the softmax Jacobian
    u = np.zeros_like(p)
    u[rows, labels] = beta
    dstd_dq = (q - q.mean(axis=1, keepdims=True)) / (
        (c - 1) * np.maximum(std, _STD_EPS)[:, None]
    )
    mask = np.ones_like(p, dtype=bool)
    mask[rows, labels] = False
    u[mask] = (-beta * dstd_dq).ravel()
    dlogits += p * (u - (u * p).sum(axis=1, keepdims=True)) / n
    return loss, dlogits


def kd_loss_grad(
    logits: np.ndarray,
    labels: np.ndarray,
    targets: np.ndarray,
    lam: float,
    tau,
):
    """Combined hard-label/distillation loss and its student-logit
    gradient. ``tau`` is the student-side temperature, scalar or
    per-sample; the distillation term carries the tau^2 factor."""
    n = logits.shape[0]
    rows = np.arange(n)
    tau = np.broadcast_to(np.asarray(tau, dtype=np.float64), (n,))

    p1 = softmax_rows(logits, 1.0)
    onehot = np.zeros_like(p1)
    onehot[rows, labels] = 1.0
    loss = -(1.0 - lam) * float(
        np.mean(_log_softmax_rows(logits)[rows, labels])
    )
    dlogits = (1.0 - lam) * (p1 - onehot)

    if lam > 0.0:
        scaled = logits / tau[:, None]
        pt = softmax_rows(scaled, 1.0)
        kd_terms = -(targets * _log_softmax_rows(scaled)).sum(axis=1)
        loss += lam * float(np.mean(tau**2 * kd_terms))
        dlogits += lam * tau[:, None] * (pt - targets)
    return loss, dlogits / n


def _run_sgd(model: MlpModel, x, y, config: TrainConfig, loss_grad, label: str):
    """Mini-batch SGD with momentum; deterministic under config.seed."""
    rng = np.random.default_rng(config.seed)
    params = model.params()
    velocity = [np.zeros_like(p) for p in params]
    n = x.shape[0]
    last_loss = np.nan
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            logits, _, acts = model.forward_cached(x[idx])
            loss, dlogits = loss_grad(logits, idx)
            grads_w, grads_b = model.backward(acts, dlogits)
            grads = [*grads_w, *grads_b]
            for p, v, g in zip(params, velocity, grads):
                if config.weight_decay:
                    g = g + config.weight_decay * p
                v *= config.momentum
                v -= config.learning_rate * g
                p += v
            epoch_loss += loss * idx.size
        last_loss = epoch_loss / n
        if not np.isfinite(last_loss):
            raise RunError(f"{label}: loss diverged at epoch {epoch}")
    return last_loss


def train_teacher(
    task: GroupTask,
    hidden_widths,
    config: TrainConfig,
    regt_beta: float | None = None,
    relu_features: bool = False,
) -> TrainResult:
    """Train a classifier on the task; with ``regt_beta`` the loss adds
    the dispersion-encouraging teacher regularizer."""
    model = MlpModel.init_random(
        task.x_train.shape[1],
        hidden_widths,
        task.num_classes,
        seed=config.seed,
        relu_features=relu_features,
    )
    x, y = task.x_train, task.y_train

    if regt_beta is None:
        def loss_grad(logits, idx):
            return ce_loss_grad(logits, y[idx])
    else:
        def loss_grad(logits, idx):
            return regt_loss_grad(logits, y[idx], regt_beta)

    final_loss = _run_sgd(model, x, y, config, loss_grad, label="teacher")
    return TrainResult(
        model=model,
        train_accuracy=model.accuracy(x, y),
        test_accuracy=model.accuracy(task.x_test, task.y_test),
        final_loss=final_loss,
    )


def _teacher_targets(
    teacher: MlpModel,
    task: GroupTask,
    policy: TemperaturePolicy,
    fgcr: tuple[float, float] | None,
):
    """Teacher-side targets for every training sample, computed once (the
    teacher is frozen), plus the per-sample student temperature."""
    t_logits, _ = teacher.forward(task.x_train)
    labels = task.y_train
    targets, tau_star = policy_rows(t_logits, labels, policy)

    if policy.kind == "ts":
        student_tau = np.full(labels.size, policy.tau)
    elif policy.kind == "ats":
        student_tau = np.full(labels.size, policy.tau2)
    else:
        student_tau = tau_star

    if fgcr is not None:
        alpha, tau0 = fgcr
        if policy.kind != "ts":
            raise ConfigError("class-prior fusion pairs with a ts policy")
        records = [
            LogitRecord(sample_id=str(i), label=int(labels[i]), logits=t_logits[i])
            for i in range(labels.size)
        ]
        priors = build_class_priors(records, tau0)
        prior_matrix = np.stack(
            [priors[c].mean_probs for c in range(task.num_classes)]
        )
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        targets = (1.0 - alpha) * targets + alpha * prior_matrix[labels]
    return targets, student_tau


def distill(
    teacher: MlpModel,
    student_widths,
    task: GroupTask,
    config: TrainConfig,
    policy: TemperaturePolicy | None = None,
    fgcr: tuple[float, float] | None = None,
) -> TrainResult:
    """Train a student on the combined hard-label/distillation objective
    with teacher targets from the given policy (TS at config.tau when
    omitted), optionally fused with class priors."""
    if policy is None:
        policy = TemperaturePolicy.ts(config.tau)
    targets, student_tau = _teacher_targets(teacher, task, policy, fgcr)

    model = MlpModel.init_random(
        task.x_train.shape[1], student_widths, task.num_classes, seed=config.seed
    )
    x, y = task.x_train, task.y_train

    def loss_grad(logits, idx):
        return kd_loss_grad(
            logits, y[idx], targets[idx], config.lam, student_tau[idx]
        )

    final_loss = _run_sgd(model, x, y, config, loss_grad, label="student")
    return TrainResult(
        model=model,
        train_accuracy=model.accuracy(x, y),
        test_accuracy=model.accuracy(task.x_test, task.y_test),
        final_loss=final_loss,
    )
