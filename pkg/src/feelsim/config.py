"""INI experiment files.

Sections mirror the simulation config; physical quantities carry their unit
in the key name. Unknown sections and keys are rejected. Example::

    [simulation]
    num_workers = 50
    participants_per_round = 10
    rounds = 30
    deadline_s = 10
    bandwidth_hz = 1e6

    [trainer]
    epochs = 5
    threshold = 0.8

    [data]
    source = synthetic
"""

from __future__ import annotations

import configparser
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .channel import ChannelParams, dbm_to_watts
from .errors import ConfigError, DomainError
from .learning.training import TrainerConfig
from .orchestrator import DataSpec, SimulationConfig
from .resource import ComputeProfile, PowerProfile


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimulationSection(_Section):
    num_workers: int = Field(50, ge=1)
    participants_per_round: int = Field(10, ge=1)
    rounds: int = Field(30, ge=1)
    deadline_s: float = Field(10.0, gt=0)
    bandwidth_hz: float = Field(1e6, gt=0)
    model_bits: Optional[float] = Field(None, gt=0)
    energy_budget_j: float = Field(10.0, gt=0)
    initial_battery_j: float = Field(100.0, ge=0)
    distance_min_m: float = Field(5.0, gt=0)
    distance_max_m: float = Field(20.0, gt=0)
    hidden_units: int = Field(64, ge=1)
    init_std: float = Field(0.01, ge=0)
    exclusion: bool = True
    master_seed: int = Field(0, ge=0)


class TrainerSection(_Section):
    learning_rate: float = Field(0.1, gt=0)
    batch_size: int = Field(20, ge=1)
    epochs: int = Field(5, ge=1)
    threshold: float = Field(1.0, ge=0, le=1)
    prob_mode: Literal["true_label", "max_class"] = "true_label"


class ChannelSection(_Section):
    num_antennas: int = Field(8, ge=1)
    noise_power_w: float = Field(1e-6, gt=0)
    rician_factor_db: float = 8.0
    path_loss_exponent: float = Field(3.2, gt=0)
    reference_distance_m: float = Field(1.0, gt=0)
    include_interference: bool = True


class WorkerSection(_Section):
    f_min_hz: float = Field(1e8, gt=0)
    f_max_hz: float = Field(2e9, gt=0)
    alpha: float = Field(2e-28, gt=0)
    phi_cycles_per_sample: float = Field(1e7, gt=0)
    p_min_dbm: float = -10.0
    p_max_dbm: float = 20.0


class DataSection(_Section):
    source: Literal["synthetic", "idx"] = "synthetic"
    classes: int = Field(10, ge=2)
    input_dim: int = Field(20, ge=1)
    samples_per_class: int = Field(1250, ge=1)
    separation: float = Field(0.7, ge=0)
    noise: float = Field(1.0, gt=0)
    images_path: Optional[str] = None
    labels_path: Optional[str] = None
    limit: Optional[int] = Field(None, ge=1)
    test_fraction: float = Field(0.2, gt=0, lt=1)
    concentration: float = Field(1.0, gt=0)


class OutputSection(_Section):
    out_dir: str = "results"


class ExperimentConfig(_Section):
    simulation: SimulationSection = Field(default_factory=SimulationSection)
    trainer: TrainerSection = Field(default_factory=TrainerSection)
    channel: ChannelSection = Field(default_factory=ChannelSection)
    worker: WorkerSection = Field(default_factory=WorkerSection)
    data: DataSection = Field(default_factory=DataSection)
    output: OutputSection = Field(default_factory=OutputSection)

    def to_simulation(self) -> SimulationConfig:
        s, t, c, w, d = self.simulation, self.trainer, self.channel, self.worker, self.data
        try:
            return SimulationConfig(
                num_workers=s.num_workers,
                participants_per_round=s.participants_per_round,
                rounds=s.rounds,
                deadline=s.deadline_s,
                bandwidth=s.bandwidth_hz,
                model_bits=s.model_bits,
                energy_budget=s.energy_budget_j,
                initial_battery=s.initial_battery_j,
                trainer=TrainerConfig(t.learning_rate, t.batch_size, t.epochs, t.threshold, 0, t.prob_mode),
                channel=ChannelParams(
                    c.num_antennas, c.noise_power_w, c.rician_factor_db,
                    c.path_loss_exponent, c.reference_distance_m, c.include_interference,
                ),
                compute=ComputeProfile(w.f_min_hz, w.f_max_hz, w.alpha, w.phi_cycles_per_sample),
                power=PowerProfile(dbm_to_watts(w.p_min_dbm), dbm_to_watts(w.p_max_dbm)),
                distance_min=s.distance_min_m,
                distance_max=s.distance_max_m,
                hidden=s.hidden_units,
                init_std=s.init_std,
                data=DataSpec(
                    d.source, d.classes, d.input_dim, d.samples_per_class, d.separation, d.noise,
                    d.images_path, d.labels_path, d.limit, d.test_fraction, d.concentration,
                ),
                exclusion=s.exclusion,
                master_seed=s.master_seed,
            )
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    # empty values fall back to the defaults
    raw = {
        name: {k: v for k, v in parser.items(name) if v.strip() != ""}
        for name in parser.sections()
    }
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from exc
    if base_dir is not None:
        data = cfg.data
        fixed = {
            k: str((base_dir / v).resolve()) if v and not Path(v).is_absolute() else v
            for k, v in (("images_path", data.images_path), ("labels_path", data.labels_path))
        }
        cfg = cfg.model_copy(update={"data": data.model_copy(update=fixed)})
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), base_dir=path.parent)
