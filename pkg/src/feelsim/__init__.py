"""Energy-aware federated edge learning simulator with threshold-based sample exclusion."""

from .channel import ChannelParams, ChannelRealization, Beamformer
from .orchestrator import SimulationConfig, compare_runs, run_simulation
from .resource import Allocation, ComputeProfile, PowerProfile, RoundBudget, Workload, allocate

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "Beamformer",
    "ChannelParams",
    "ChannelRealization",
    "ComputeProfile",
    "PowerProfile",
    "RoundBudget",
    "SimulationConfig",
    "Workload",
    "allocate",
    "compare_runs",
    "run_simulation",
]
