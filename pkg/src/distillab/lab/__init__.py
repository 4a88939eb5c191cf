"""Desk-scale experimental apparatus: synthetic group-classification
data, a small MLP trained by explicit backprop, teacher/student training,
and the observation/mismatch experiment drivers."""

from .data import GroupTask, GroupTaskSpec, generate_group_task
from .mlp import MlpModel
from .train import TrainConfig, TrainResult, distill, train_teacher

__all__ = [
    "GroupTask",
    "GroupTaskSpec",
    "generate_group_task",
    "MlpModel",
    "TrainConfig",
    "TrainResult",
    "train_teacher",
    "distill",
]
