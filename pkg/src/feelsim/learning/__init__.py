from .data import (
    LocalDataset,
    load_idx_dataset,
    make_blobs,
    partition_noniid,
    read_idx,
    train_test_split,
    write_idx,
)
from .model import ModelParams, ModelShape, init_params, predict_prob, zeros
from .training import (
    ExclusionResult,
    LocalUpdate,
    TrainerConfig,
    evaluate,
    fedavg_aggregate,
    global_loss,
    grad_local_loss,
    local_loss,
    local_train_baseline,
    local_train_with_exclusion,
    sgd_epoch,
    threshold_filter,
)

__all__ = [
    "ExclusionResult",
    "LocalDataset",
    "LocalUpdate",
    "ModelParams",
    "ModelShape",
    "TrainerConfig",
    "evaluate",
    "fedavg_aggregate",
    "global_loss",
    "grad_local_loss",
    "init_params",
    "load_idx_dataset",
    "local_loss",
    "local_train_baseline",
    "local_train_with_exclusion",
    "make_blobs",
    "partition_noniid",
    "predict_prob",
    "read_idx",
    "sgd_epoch",
    "threshold_filter",
    "train_test_split",
    "write_idx",
    "zeros",
]
