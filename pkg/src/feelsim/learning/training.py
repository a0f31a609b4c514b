"""Local training, threshold-based sample exclusion and FedAvg aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DomainError
from ..seeding import derive_seed, rng
from .data import LocalDataset
from .model import ModelParams, cross_entropy, cross_entropy_grad, predict_prob

PROB_TRUE_LABEL = "true_label"
PROB_MAX_CLASS = "max_class"


@dataclass(frozen=True)
class TrainerConfig:
    learning_rate: float = 0.1
    batch_size: int = 20
    epochs: int = 5
    threshold: float = 1.0
    seed: int = 0
    prob_mode: str = PROB_TRUE_LABEL

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise DomainError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise DomainError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise DomainError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.prob_mode not in (PROB_TRUE_LABEL, PROB_MAX_CLASS):
            raise DomainError(f"unknown prob_mode {self.prob_mode!r}")


@dataclass(frozen=True)
class ExclusionResult:
    retained: np.ndarray
    excluded_count: int
    per_sample_prob: np.ndarray


@dataclass(frozen=True)
class LocalUpdate:
    params: ModelParams
    excluded: int
    final_loss: float
    num_samples: int


def local_loss(params: ModelParams, data: LocalDataset) -> float:
    """Mean per-sample cross-entropy over ``data``."""
    return cross_entropy(params, data.inputs, data.labels)


def grad_local_loss(params: ModelParams, data: LocalDataset) -> np.ndarray:
    return cross_entropy_grad(params, data.inputs, data.labels)


def sgd_epoch(
    params: ModelParams, data: LocalDataset, lr: float, batch_size: int, seed: int
) -> ModelParams:
    """One pass of mini-batch SGD over a seeded shuffle of ``data``."""
    if batch_size < 1:
        raise DomainError(f"batch_size must be >= 1, got {batch_size}")
    n = len(data)
    if n == 0:
        return params
    order = rng(seed, "shuffle").permutation(n)
    theta = params.theta.copy()
    p = params
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        theta -= lr * cross_entropy_grad(p, data.inputs[idx], data.labels[idx])
        p = params.with_theta(theta)
    return p


def threshold_filter(
    params: ModelParams, data: LocalDataset, threshold: float, prob_mode: str = PROB_TRUE_LABEL
) -> ExclusionResult:
    """Keep sample d iff P(x_d) <= threshold.

    P(x_d) is the predicted probability of the sample's true label, or of the
    arg-max class when ``prob_mode="max_class"``.
    """
    if not 0.0 <= threshold <= 1.0:
        raise DomainError(f"threshold must be in [0, 1], got {threshold}")
    if len(data) == 0:
        return ExclusionResult(np.empty(0, dtype=np.int64), 0, np.empty(0))
    probs = predict_prob(params, data.inputs)
    if prob_mode == PROB_TRUE_LABEL:
        p = probs[np.arange(len(data)), data.labels]
    elif prob_mode == PROB_MAX_CLASS:
        p = probs.max(axis=1)
    else:
        raise DomainError(f"unknown prob_mode {prob_mode!r}")
    retained = np.flatnonzero(p <= threshold)
    return ExclusionResult(retained, len(data) - len(retained), p)


def _epoch_seed(cfg: TrainerConfig, epoch: int) -> int:
    return derive_seed(cfg.seed, "epoch", epoch)


def local_train_baseline(
    params: ModelParams, data: LocalDataset, cfg: TrainerConfig
) -> LocalUpdate:
    """Plain local training: ``cfg.epochs`` SGD passes over the full dataset."""
    p = params
    for e in range(1, cfg.epochs + 1):
        p = sgd_epoch(p, data, cfg.learning_rate, cfg.batch_size, _epoch_seed(cfg, e))
    return LocalUpdate(p, 0, local_loss(p, data), len(data))


def local_train_with_exclusion(
    params: ModelParams, data: LocalDataset, cfg: TrainerConfig
) -> LocalUpdate:
    """Local training that drops confidently-classified samples after epoch 1.

    Epoch 1 runs on the full dataset. The resulting model scores every local
    sample, samples with P(x_d) > threshold are dropped, and epochs
    2..``cfg.epochs`` run on the retained subset only. If nothing is retained
    the epoch-1 model is returned.
    """
    p = sgd_epoch(params, data, cfg.learning_rate, cfg.batch_size, _epoch_seed(cfg, 1))
    kept = threshold_filter(p, data, cfg.threshold, cfg.prob_mode)
    if cfg.epochs > 1 and len(kept.retained):
        subset = data.subset(kept.retained)
        for e in range(2, cfg.epochs + 1):
            p = sgd_epoch(p, subset, cfg.learning_rate, cfg.batch_size, _epoch_seed(cfg, e))
    return LocalUpdate(p, kept.excluded_count, local_loss(p, data), len(data))


def _weights(sizes: Sequence[int]) -> np.ndarray:
    sizes = np.asarray(sizes, dtype=np.float64)
    if sizes.size == 0:
        raise DomainError("cannot aggregate an empty list of updates")
    if np.any(sizes < 0) or not sizes.sum() > 0:
        raise DomainError("dataset sizes must be non-negative with a positive total")
    return sizes / sizes.sum()


def fedavg_aggregate(updates: Sequence[tuple[ModelParams, int]]) -> ModelParams:
    """Dataset-size weighted average of participant parameters."""
    if not updates:
        raise DomainError("cannot aggregate an empty list of updates")
    shape = updates[0][0].shape
    if any(u.shape != shape for u, _ in updates):
        raise DomainError("all updates must share one model shape")
    if len(updates) == 1:
        return updates[0][0]
    delta = _weights([n for _, n in updates])
    stack = np.stack([u.theta for u, _ in updates])
    theta = delta @ stack
    # rounding can push a coordinate one ulp outside the convex hull
    theta = np.clip(theta, stack.min(axis=0), stack.max(axis=0))
    return ModelParams(theta, shape)


def global_loss(losses: Sequence[tuple[float, int]]) -> float:
    """Dataset-size weighted mean of local losses."""
    delta = _weights([n for _, n in losses])
    return float(delta @ np.asarray([f for f, _ in losses], dtype=np.float64))


def evaluate(params: ModelParams, test: LocalDataset) -> tuple[float, float]:
    """Top-1 accuracy and mean cross-entropy on ``test``."""
    if len(test) == 0:
        raise DomainError("cannot evaluate on an empty test set")
    probs = predict_prob(params, test.inputs)
    acc = float(np.mean(probs.argmax(axis=1) == test.labels))
    return acc, local_loss(params, test)
