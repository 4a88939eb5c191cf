"""Small fully-connected network with explicit forward and backward
passes (no autograd framework).

Architecture for hidden widths [w1, ..., wk]:

    x -> affine(w1)+relu -> ... -> affine(wk)   <- features, no activation
      -> features @ W_out                        <- logits, no bias

The feature layer keeps its bias but has no rectifier; the output layer
has neither.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, InputError


@dataclass
class MlpModel:
    input_dim: int
    hidden_widths: tuple[int, ...]
    num_classes: int
    weights: list[np.ndarray] = field(repr=False)  # hidden affines + W_out last
    biases: list[np.ndarray] = field(repr=False)  # one per hidden affine
    relu_features: bool = False  # rectify the feature layer too

    @classmethod
    def init_random(
        cls,
        input_dim: int,
        hidden_widths,
        num_classes: int,
        seed: int = 0,
        relu_features: bool = False,
    ) -> "MlpModel":
        """He-scaled Gaussian weights, zero biases."""
        widths = tuple(int(w) for w in hidden_widths)
        if not widths:
            raise ConfigError("need at least one hidden layer")
        if any(w < 1 for w in widths):
            raise ConfigError("hidden widths must be positive")
        rng = np.random.default_rng(seed)
        dims = (input_dim, *widths)
        weights = [
            rng.standard_normal((a, b)) * np.sqrt(2.0 / a)
            for a, b in zip(dims, dims[1:])
        ]
        biases = [np.zeros(b) for b in dims[1:]]
        weights.append(rng.standard_normal((widths[-1], num_classes))
                       * np.sqrt(2.0 / widths[-1]))
        return cls(
            input_dim=input_dim,
            hidden_widths=widths,
            num_classes=num_classes,
            weights=weights,
            biases=biases,
            relu_features=relu_features,
        )

    @property
    def feature_dim(self) -> int:
        return self.hidden_widths[-1]

    @property
    def num_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batch forward pass -> (logits, features)."""
        logits, feats, _ = self.forward_cached(x)
        return logits, feats

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping layer activations for backprop."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise InputError(
                f"input dim {x.shape[1]} does not match model dim {self.input_dim}"
            )
        acts = [x]
        n_hidden = len(self.biases)
        h = x
        for i in range(n_hidden):
            h = h @ self.weights[i] + self.biases[i]
            if i < n_hidden - 1 or self.relu_features:
                h = np.maximum(h, 0.0)
            acts.append(h)
        logits = h @ self.weights[-1]
        return logits, h, acts

    def backward(self, acts, dlogits: np.ndarray):
        """Gradients of a scalar loss w.r.t. all parameters, given the
        cached activations and the loss gradient at the logits."""
        n_hidden = len(self.biases)
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        feats = acts[-1]
        grads_w[-1] = feats.T @ dlogits
        dh = dlogits @ self.weights[-1].T
        for i in range(n_hidden - 1, -1, -1):
            if i < n_hidden - 1 or self.relu_features:
                dh = dh * (acts[i + 1] > 0.0)
            grads_w[i] = acts[i].T @ dh
            grads_b[i] = dh.sum(axis=0)
            if i > 0:
                dh = dh @ self.weights[i].T
        return grads_w, grads_b

    def params(self):
        """All parameter arrays (weights then biases), shared references."""
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpModel":
        return MlpModel(
            input_dim=self.input_dim,
            hidden_widths=self.hidden_widths,
            num_classes=self.num_classes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            relu_features=self.relu_features,
        )

    def accuracy(self, x: np.ndarray, y: np.ndarray) -> float:
        logits, _ = self.forward(x)
        return float(np.mean(np.argmax(logits, axis=1) == y))
