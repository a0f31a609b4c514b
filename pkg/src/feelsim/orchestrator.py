"""Round-based federated edge learning simulation.

Each round: fresh block-fading channels, optimal receive beamformers and
their SINR coefficients, a feasibility pre-pass (allocation with no samples
excluded) that decides who may be selected, local training, re-allocation
with the measured exclusion count, battery accounting, FedAvg and
evaluation of the new global model.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .channel import ChannelParams, dbm_to_watts, effective_betas, sample_channels
from .errors import DomainError
from .learning.data import LocalDataset, load_idx_dataset, make_blobs, partition_noniid, train_test_split
from .learning.model import ModelParams, ModelShape, init_params
from .learning.training import (
    TrainerConfig,
    evaluate,
    fedavg_aggregate,
    global_loss,
    local_train_baseline,
    local_train_with_exclusion,
)
from .resource import Allocation, ComputeProfile, PowerProfile, RoundBudget, Workload, allocate
from .seeding import derive_seed, rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DataSpec:
    source: str = "synthetic"
    # synthetic blobs
    classes: int = 10
    input_dim: int = 20
    samples_per_class: int = 1250
    separation: float = 0.7
    noise: float = 1.0
    # idx files
    images_path: str | None = None
    labels_path: str | None = None
    limit: int | None = None
    # shared
    test_fraction: float = 0.2
    concentration: float = 1.0

    def __post_init__(self):
        if self.source not in ("synthetic", "idx"):
            raise DomainError(f"unknown data source {self.source!r}")
        if self.source == "idx" and not (self.images_path and self.labels_path):
            raise DomainError("idx data source needs images_path and labels_path")


@dataclass(frozen=True)
class SimulationConfig:
    num_workers: int = 50
    participants_per_round: int = 10
    rounds: int = 30
    deadline: float = 10.0
    bandwidth: float = 1e6
    # None -> 32 bits per model parameter
    model_bits: float | None = None
    energy_budget: float = 10.0
    initial_battery: float = 100.0
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    compute: ComputeProfile = field(
        default_factory=lambda: ComputeProfile(f_min=1e8, f_max=2e9, alpha=2e-28, phi=1e7)
    )
    power: PowerProfile = field(
        default_factory=lambda: PowerProfile(p_min=dbm_to_watts(-10.0), p_max=dbm_to_watts(20.0))
    )
    distance_min: float = 5.0
    distance_max: float = 20.0
    hidden: int = 64
    init_std: float = 0.01
    data: DataSpec = field(default_factory=DataSpec)
    # False runs the plain-SGD baseline code path
    exclusion: bool = True
    master_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.participants_per_round <= self.num_workers:
            raise DomainError(
                f"need 1 <= participants_per_round <= num_workers, got "
                f"{self.participants_per_round} / {self.num_workers}"
            )
        if self.rounds < 1:
            raise DomainError(f"rounds must be >= 1, got {self.rounds}")
        if not 0 < self.distance_min <= self.distance_max:
            raise DomainError("need 0 < distance_min <= distance_max")
        if self.initial_battery < 0:
            raise DomainError("initial_battery must be >= 0")


@dataclass
class WorkerState:
    worker_id: int
    dataset: LocalDataset
    compute: ComputeProfile
    power: PowerProfile
    battery: float
    distance: float
    los_angle: float

    def __post_init__(self):
        if self.battery < 0:
            raise DomainError(f"worker {self.worker_id}: battery must be >= 0")


@dataclass(frozen=True)
class WorkerRound:
    worker_id: int
    num_samples: int
    iota: int
    e_cmp: float
    e_up: float
    t_up: float
    t_cmp: float
    f_cmp: float
    p_up: float
    feasible: bool

    @property
    def energy(self) -> float:
        return self.e_cmp + self.e_up

    @property
    def retained(self) -> int:
        return self.num_samples - self.iota


@dataclass(frozen=True)
class RoundRecord:
    round: int
    workers: tuple[WorkerRound, ...]
    energy: float
    cumulative_energy: float
    test_accuracy: float
    test_loss: float
    train_loss: float

    @property
    def retained(self) -> int:
        return sum(w.retained for w in self.workers)


@dataclass(frozen=True)
class Federation:
    train: tuple[LocalDataset, ...]
    test: LocalDataset
    shape: ModelShape


@dataclass
class SimulationState:
    cfg: SimulationConfig
    federation: Federation
    workers: list[WorkerState]
    params: ModelParams
    cumulative_energy: float = 0.0
    worker_energy: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunComparison:
    energy_reduction_pct: float
    accuracy_delta: float


def build_federation(cfg: SimulationConfig) -> Federation:
    spec = cfg.data
    seed = derive_seed(cfg.master_seed, "data")
    if spec.source == "synthetic":
        full = make_blobs(
            spec.classes, spec.input_dim, spec.samples_per_class, seed, spec.separation, spec.noise
        )
    else:
        full = load_idx_dataset(spec.images_path, spec.labels_path, spec.limit)
    train, test = train_test_split(full, spec.test_fraction, seed)
    parts = partition_noniid(train, cfg.num_workers, spec.concentration, seed)
    classes = int(full.labels.max()) + 1 if spec.source == "idx" else spec.classes
    return Federation(tuple(parts), test, ModelShape(full.input_dim, cfg.hidden, classes))


def model_bits(cfg: SimulationConfig, shape: ModelShape) -> float:
    return float(cfg.model_bits) if cfg.model_bits is not None else float(shape.model_bits)


def round_budget(cfg: SimulationConfig, shape: ModelShape) -> RoundBudget:
    return RoundBudget(cfg.deadline, cfg.bandwidth, model_bits(cfg, shape), cfg.energy_budget)


def init_state(cfg: SimulationConfig, federation: Federation | None = None) -> SimulationState:
    fed = federation if federation is not None else build_federation(cfg)
    if len(fed.train) != cfg.num_workers:
        raise DomainError(f"federation has {len(fed.train)} workers, config wants {cfg.num_workers}")
    g = rng(cfg.master_seed, "geometry")
    dists = g.uniform(cfg.distance_min, cfg.distance_max, cfg.num_workers)
    angles = g.uniform(-math.pi / 2, math.pi / 2, cfg.num_workers)
    workers = [
        WorkerState(k, fed.train[k], cfg.compute, cfg.power, cfg.initial_battery, float(dists[k]), float(angles[k]))
        for k in range(cfg.num_workers)
    ]
    theta0 = init_params(fed.shape, derive_seed(cfg.master_seed, "theta0"), cfg.init_std)
    return SimulationState(cfg, fed, workers, theta0, worker_energy={k: 0.0 for k in range(cfg.num_workers)})


def prepass_allocation(worker: WorkerState, budget: RoundBudget, beta: float, epochs: int) -> Allocation:
    """Allocation assuming nothing is excluded; the conservative selection test."""
    return allocate(budget, Workload(len(worker.dataset), 0, epochs), worker.compute, worker.power, beta)


def select_workers(
    workers: Sequence[WorkerState],
    S: int,
    budget: RoundBudget,
    betas: Sequence[float],
    seed: int,
    epochs: int = 1,
) -> list[int]:
    """Pick up to ``S`` workers uniformly among those that can afford the round.

    A worker qualifies when its no-exclusion allocation is feasible and its
    battery covers that allocation's energy. Returned ids are sorted.
    """
    if S < 1:
        raise DomainError(f"S must be >= 1, got {S}")
    candidates = []
    for w, beta in zip(workers, betas):
        if len(w.dataset) == 0 or w.battery <= 0:
            continue
        alloc = prepass_allocation(w, budget, beta, epochs)
        if alloc.feasible and alloc.total_energy <= w.battery:
            candidates.append(w.worker_id)
    if len(candidates) <= S:
        return candidates
    picked = rng(seed, "select").choice(len(candidates), size=S, replace=False)
    return sorted(candidates[i] for i in picked)


def run_round(state: SimulationState, r: int) -> RoundRecord:
    """Advance ``state`` by one global round and return its record."""
    if r < 1:
        raise DomainError(f"rounds are numbered from 1, got {r}")
    cfg = state.cfg
    budget = round_budget(cfg, state.params.shape)
    eps = cfg.trainer.epochs

    channels = sample_channels(
        [w.distance for w in state.workers],
        cfg.channel,
        derive_seed(cfg.master_seed, "channel", r),
        los_angles=[w.los_angle for w in state.workers],
    )
    betas, _ = effective_betas(channels, cfg.channel)
    selected = select_workers(
        state.workers, cfg.participants_per_round, budget, betas,
        derive_seed(cfg.master_seed, "select", r), eps,
    )

    trainer = local_train_with_exclusion if cfg.exclusion else local_train_baseline
    updates, losses, rows = [], [], []
    for k in selected:
        worker = state.workers[k]
        tcfg = replace(cfg.trainer, seed=derive_seed(cfg.master_seed, "train", r, k))
        upd = trainer(state.params, worker.dataset, tcfg)
        n = len(worker.dataset)
        alloc = allocate(budget, Workload(n, upd.excluded, eps), worker.compute, worker.power, betas[k])
        if not alloc.feasible:
            # fewer cycles raise the CPU window's lower edge; with a very strong channel it can
            # overtake the p_min edge of the power window. Keep the no-exclusion schedule then.
            log.warning("round %d worker %d: re-allocation infeasible %s", r, k, sorted(map(str, alloc.violations)))
            alloc = prepass_allocation(worker, budget, betas[k], eps)
        spent = alloc.e_cmp + alloc.e_up
        worker.battery = worker.battery - spent
        state.worker_energy[k] += spent
        rows.append(
            WorkerRound(k, n, upd.excluded, alloc.e_cmp, alloc.e_up, alloc.t_up, alloc.t_cmp,
                        alloc.f_cmp, alloc.p_up, alloc.feasible)
        )
        updates.append((upd.params, n))
        losses.append((upd.final_loss, n))

    if updates:
        state.params = fedavg_aggregate(updates)
    energy = float(sum(w.energy for w in rows))
    state.cumulative_energy += energy
    acc, test_loss = evaluate(state.params, state.federation.test)
    return RoundRecord(
        round=r,
        workers=tuple(rows),
        energy=energy,
        cumulative_energy=state.cumulative_energy,
        test_accuracy=acc,
        test_loss=test_loss,
        train_loss=global_loss(losses) if losses else math.nan,
    )


def run_simulation(cfg: SimulationConfig, federation: Federation | None = None) -> list[RoundRecord]:
    """Run ``cfg.rounds`` rounds from a seeded initial model; deterministic in ``master_seed``."""
    state = init_state(cfg, federation)
    trace = []
    for r in range(1, cfg.rounds + 1):
        rec = run_round(state, r)
        log.info(
            "round %d: %d workers, E=%.4g J, cum=%.4g J, acc=%.4f",
            r, len(rec.workers), rec.energy, rec.cumulative_energy, rec.test_accuracy,
        )
        trace.append(rec)
    return trace


def compare_runs(trace_a: Sequence[RoundRecord], trace_b: Sequence[RoundRecord]) -> RunComparison:
    """Energy saved by run A relative to run B, and A's final accuracy minus B's."""
    if len(trace_a) != len(trace_b):
        raise DomainError(f"traces differ in length: {len(trace_a)} vs {len(trace_b)}")
    if not trace_a:
        raise DomainError("cannot compare empty traces")
    ea, eb = trace_a[-1].cumulative_energy, trace_b[-1].cumulative_energy
    reduction = 100.0 * (1.0 - ea / eb) if eb > 0 else 0.0
    return RunComparison(reduction, trace_a[-1].test_accuracy - trace_b[-1].test_accuracy)
