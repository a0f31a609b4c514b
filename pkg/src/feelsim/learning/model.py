"""Single-hidden-layer tanh network with a softmax output.

Parameters live in one flat float64 vector laid out as
``[W1 (d*h), b1 (h), W2 (h*C), b2 (C)]`` so that aggregation and the
upload-size bookkeeping operate on a single array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..seeding import rng

BITS_PER_PARAM = 32


@dataclass(frozen=True)
class ModelShape:
    input_dim: int
    hidden: int
    classes: int

    @property
    def num_params(self) -> int:
        d, h, c = self.input_dim, self.hidden, self.classes
        return d * h + h + h * c + c

    @property
    def model_bits(self) -> int:
        return self.num_params * BITS_PER_PARAM


@dataclass(frozen=True)
class ModelParams:
    theta: np.ndarray
    shape: ModelShape

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1 or theta.size != self.shape.num_params:
            raise DomainError(
                f"theta has {theta.size} entries, shape implies {self.shape.num_params}"
            )
        if not np.all(np.isfinite(theta)):
            raise DomainError("theta contains non-finite entries")
        object.__setattr__(self, "theta", theta)

    def unpack(self):
        """Views (W1, b1, W2, b2) into ``theta``."""
        d, h, c = self.shape.input_dim, self.shape.hidden, self.shape.classes
        o = 0
        W1 = self.theta[o : o + d * h].reshape(d, h)
        o += d * h
        b1 = self.theta[o : o + h]
        o += h
        W2 = self.theta[o : o + h * c].reshape(h, c)
        o += h * c
        b2 = self.theta[o : o + c]
        return W1, b1, W2, b2

    def with_theta(self, theta: np.ndarray) -> "ModelParams":
        return ModelParams(theta, self.shape)


def zeros(shape: ModelShape) -> ModelParams:
    return ModelParams(np.zeros(shape.num_params), shape)


def init_params(shape: ModelShape, seed: int, std: float = 0.01) -> ModelParams:
    return ModelParams(std * rng(seed, "init").standard_normal(shape.num_params), shape)


def _check_inputs(params: ModelParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != params.shape.input_dim:
        raise DomainError(f"input dimension {X.shape[1]} != model input {params.shape.input_dim}")
    return X


def forward(params: ModelParams, X: np.ndarray):
    """Return (logits, hidden activations) for a batch ``X`` of shape (n, d)."""
    W1, b1, W2, b2 = params.unpack()
    H = np.tanh(X @ W1 + b1)
    return H @ W2 + b2, H


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict_prob(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one input vector (1-D result) or a batch (2-D)."""
    single = np.ndim(x) == 1
    X = _check_inputs(params, x)
    p = softmax(forward(params, X)[0])
    return p[0] if single else p


def cross_entropy(params: ModelParams, X: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        raise DomainError("cross-entropy of an empty dataset is undefined")
    X = _check_inputs(params, X)
    logp = log_softmax(forward(params, X)[0])
    return float(-logp[np.arange(len(y)), y].sum() / len(y))


def cross_entropy_grad(params: ModelParams, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic gradient of the mean cross-entropy, flattened like ``theta``."""
    n = len(y)
    if n == 0:
        raise DomainError("gradient of an empty dataset is undefined")
    X = _check_inputs(params, X)
    _, _, W2, _ = params.unpack()
    logits, H = forward(params, X)
    dL = softmax(logits)
    dL[np.arange(n), y] -= 1.0
    dL /= n
    gW2 = H.T @ dL
    gb2 = dL.sum(axis=0)
    dZ = (dL @ W2.T) * (1.0 - H**2)
    gW1 = X.T @ dZ
    gb1 = dZ.sum(axis=0)
    return np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])
