"""Per-worker computation/communication energy model and allocator.

Units are SI throughout: seconds, hertz, watts, joules, bits and CPU cycles.

The allocator follows a fixed pipeline for one worker and one round:

1. cycles after exclusion ``rho = phi * (eps*|D| - iota*(eps-1))``
2. feasible upload-time window from the CPU range (and the transmit-power
   range, which also bounds the upload time)
3. golden-section search of ``E_up(t) + E_cmp(T - t)`` over that window
4. back-solve ``t_cmp = T - t_up``, ``f = rho / t_cmp`` and the transmit power
   that delivers exactly ``model_bits`` in ``t_up``
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import Beamformer, uplink_bits
from .errors import DomainError, InfeasibleWorkerError

log = logging.getLogger(__name__)

GOLDEN_PHI = (3.0 - math.sqrt(5.0)) / 2.0
# lower clamp on the upload window, as a fraction of the deadline
WINDOW_FLOOR_FRACTION = 1e-6
DEFAULT_REL_TOL = 1e-6
RANGE_RTOL = 1e-9
RATE_RTOL = 1e-9
BEAM_NORM_TOL = 1e-9
_MAX_GOLDEN_ITERS = 200
_EXP_OVERFLOW = math.log(np.finfo(float).max)


class Constraint(str, enum.Enum):
    ENERGY_BUDGET = "ENERGY_BUDGET"
    DEADLINE = "DEADLINE"
    POWER_RANGE = "POWER_RANGE"
    FREQ_RANGE = "FREQ_RANGE"
    RATE = "RATE"
    BEAM_NORM = "BEAM_NORM"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ComputeProfile:
    f_min: float
    f_max: float
    alpha: float
    phi: float

    def __post_init__(self):
        if not 0 < self.f_min <= self.f_max:
            raise DomainError(f"need 0 < f_min <= f_max, got [{self.f_min}, {self.f_max}]")
        if not self.alpha > 0 or not self.phi > 0:
            raise DomainError("alpha and phi must be > 0")


@dataclass(frozen=True)
class PowerProfile:
    p_min: float
    p_max: float

    def __post_init__(self):
        if not 0 < self.p_min <= self.p_max:
            raise DomainError(f"need 0 < p_min <= p_max, got [{self.p_min}, {self.p_max}]")


@dataclass(frozen=True)
class Workload:
    num_samples: int
    excluded: int = 0
    epochs: int = 1

    def __post_init__(self):
        if self.num_samples < 0 or self.excluded < 0:
            raise DomainError("sample counts must be non-negative")
        if self.excluded > self.num_samples:
            raise DomainError(f"excluded ({self.excluded}) exceeds num_samples ({self.num_samples})")
        if self.epochs < 1:
            raise DomainError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True)
class RoundBudget:
    deadline: float
    bandwidth: float
    model_bits: float
    energy_budget: float

    def __post_init__(self):
        for name in ("deadline", "bandwidth", "model_bits", "energy_budget"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class Allocation:
    t_up: float
    t_cmp: float
    f_cmp: float
    p_up: float
    e_up: float
    e_cmp: float
    violations: frozenset = field(default_factory=frozenset)
    rho: float = math.nan

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def total_energy(self) -> float:
        return self.e_up + self.e_cmp


@dataclass(frozen=True)
class EnergyBreakdown:
    e_up: float
    e_cmp: float
    f_cmp: float
    freq_in_range: bool

    @property
    def total(self) -> float:
        return self.e_up + self.e_cmp


# --- timing and energy ------------------------------------------------------


def effective_cycles(w: Workload, phi: float) -> float:
    """CPU cycles for one round: a full first epoch plus eps-1 reduced epochs."""
    return phi * (w.epochs * w.num_samples - w.excluded * (w.epochs - 1))


def baseline_cycles(num_samples: int, epochs: int, phi: float) -> float:
    return phi * (epochs * num_samples)


def compute_time(rho: float, f: float) -> float:
    if not f > 0:
        raise DomainError(f"CPU frequency must be > 0, got {f}")
    return rho / f


def compute_energy(w: Workload, f: float, profile: ComputeProfile) -> float:
    """Dynamic CPU energy (alpha/2) f^2 * cycles, with reduced epochs after the first.

    Range violations of ``f`` are not raised here; :func:`check_feasibility`
    reports them.
    """
    half = profile.alpha / 2.0
    reduced = half * (w.epochs - 1) * f**2 * (w.num_samples - w.excluded) * profile.phi
    first = half * f**2 * w.num_samples * profile.phi
    return reduced + first


def upload_power(t_up: float, bandwidth: float, model_bits: float, beta: float) -> float:
    """Transmit power that delivers exactly ``model_bits`` within ``t_up``."""
    if not t_up > 0:
        raise DomainError(f"upload time must be > 0, got {t_up}")
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    exponent = model_bits / (t_up * bandwidth) * math.log(2.0)
    if exponent > _EXP_OVERFLOW:
        # no finite power delivers the payload in time
        return math.inf
    return math.expm1(exponent) / beta


def upload_energy(t_up: float, bandwidth: float, model_bits: float, beta: float) -> float:
    return t_up * upload_power(t_up, bandwidth, model_bits, beta)


def round_energy(
    t_up: float, budget: RoundBudget, w: Workload, cp: ComputeProfile, beta: float
) -> EnergyBreakdown:
    if not 0 < t_up < budget.deadline:
        raise DomainError(f"t_up must lie in (0, {budget.deadline}), got {t_up}")
    rho = effective_cycles(w, cp.phi)
    f = rho / (budget.deadline - t_up)
    lo, hi = cp.f_min * (1 - RANGE_RTOL), cp.f_max * (1 + RANGE_RTOL)
    return EnergyBreakdown(
        e_up=upload_energy(t_up, budget.bandwidth, budget.model_bits, beta),
        e_cmp=compute_energy(w, f, cp),
        f_cmp=f,
        freq_in_range=lo <= f <= hi,
    )


def total_round_energy(
    t_up: float, budget: RoundBudget, w: Workload, cp: ComputeProfile, beta: float
) -> float:
    """Objective of the per-worker search; see :func:`round_energy` for the range flag."""
    return round_energy(t_up, budget, w, cp, beta).total


# --- search -----------------------------------------------------------------


def upload_window(budget: RoundBudget, rho: float, cp: ComputeProfile) -> tuple[float, float]:
    """Upload times for which the implied CPU frequency stays in [f_min, f_max]."""
    T = budget.deadline
    fastest = rho / cp.f_max
    if fastest >= T:
        raise InfeasibleWorkerError(
            f"computation needs {fastest:.6g} s at f_max, deadline is {T:.6g} s"
        )
    b0 = T - fastest
    a0 = max(T - rho / cp.f_min, WINDOW_FLOOR_FRACTION * T)
    return min(a0, b0), b0


def power_window(budget: RoundBudget, beta: float, pp: PowerProfile) -> tuple[float, float]:
    """Upload times for which the back-solved power stays in [p_min, p_max].

    The required power falls monotonically with the upload time, so the power
    range maps onto an interval of upload times.
    """
    def rate(p):
        return budget.bandwidth * math.log1p(beta * p) / math.log(2.0)

    return budget.model_bits / rate(pp.p_max), budget.model_bits / rate(pp.p_min)


def golden_section_minimize(
    objective: Callable[[float], float], a0: float, b0: float, tol: float | None = None
) -> tuple[float, float]:
    """Golden-section search for the minimum of a unimodal ``objective`` on [a0, b0].

    Interior points are ``a + phi (b - a)`` and ``a + (1 - phi)(b - a)`` with
    ``phi = (3 - sqrt 5) / 2``; the lower sub-interval is kept when the lower
    point is no worse. One objective evaluation per iteration.

    Returns the midpoint of the final bracket and the objective there.
    """
    if a0 > b0:
        raise DomainError(f"empty interval [{a0}, {b0}]")
    if tol is None:
        tol = DEFAULT_REL_TOL * (b0 - a0)
    elif not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    a, b = float(a0), float(b0)
    if b - a > tol:
        x1 = a + GOLDEN_PHI * (b - a)
        x2 = a + (1.0 - GOLDEN_PHI) * (b - a)
        f1, f2 = objective(x1), objective(x2)
        # the cap only matters when tol is below the float spacing of [a, b]
        for _ in range(_MAX_GOLDEN_ITERS):
            if b - a <= tol:
                break
            if f1 <= f2:
                b = x2
                x2, f2 = x1, f1
                x1 = a + GOLDEN_PHI * (b - a)
                f1 = objective(x1)
            else:
                a = x1
                x1, f1 = x2, f2
                x2 = a + (1.0 - GOLDEN_PHI) * (b - a)
                f2 = objective(x2)
    t = 0.5 * (a + b)
    return t, objective(t)


def split_deadline(deadline: float, t_up: float) -> tuple[float, float]:
    """Return (t_up, t_cmp) with t_up + t_cmp == deadline in floating point."""
    t_cmp = deadline - t_up
    t_up = deadline - t_cmp
    for _ in range(64):
        s = t_up + t_cmp
        if s == deadline:
            break
        t_up = math.nextafter(t_up, -math.inf if s > deadline else math.inf)
    else:  # pragma: no cover - never observed
        raise ArithmeticError(f"cannot split deadline {deadline!r} at {t_up!r}")
    return t_up, t_cmp


# --- allocation -------------------------------------------------------------


def check_feasibility(
    alloc: Allocation,
    budget: RoundBudget,
    cp: ComputeProfile,
    pp: PowerProfile,
    beta: float,
    beamformer: Beamformer | None = None,
) -> frozenset:
    """Set of violated constraints; empty means feasible.

    Range and rate checks carry a 1e-9 relative slack for back-solve rounding.
    The energy budget and the deadline identity are checked exactly.
    """
    v = set()
    if not alloc.e_up + alloc.e_cmp <= budget.energy_budget:
        v.add(Constraint.ENERGY_BUDGET)
    if not (alloc.t_up > 0 and alloc.t_cmp > 0 and alloc.t_up + alloc.t_cmp == budget.deadline):
        v.add(Constraint.DEADLINE)
    if not pp.p_min * (1 - RANGE_RTOL) <= alloc.p_up <= pp.p_max * (1 + RANGE_RTOL):
        v.add(Constraint.POWER_RANGE)
    if not cp.f_min * (1 - RANGE_RTOL) <= alloc.f_cmp <= cp.f_max * (1 + RANGE_RTOL):
        v.add(Constraint.FREQ_RANGE)
    bits = uplink_bits(alloc.t_up, budget.bandwidth, alloc.p_up, beta) if alloc.t_up > 0 else 0.0
    if not bits >= budget.model_bits * (1 - RATE_RTOL):
        v.add(Constraint.RATE)
    if beamformer is not None and not beamformer.norm_error <= BEAM_NORM_TOL:
        v.add(Constraint.BEAM_NORM)
    return frozenset(v)


def search_window(
    budget: RoundBudget, w: Workload, cp: ComputeProfile, pp: PowerProfile, beta: float
) -> tuple[float, float]:
    """Interval searched by :func:`allocate`: CPU window intersected with the power window.

    When the two do not overlap the CPU window alone is returned, so the
    allocation is still produced and the feasibility check names the broken
    constraint.
    """
    a0, b0 = upload_window(budget, effective_cycles(w, cp.phi), cp)
    p_lo, p_hi = power_window(budget, beta, pp)
    lo, hi = max(a0, p_lo), min(b0, p_hi)
    if lo > hi:
        return a0, b0
    return lo, hi


def _infeasible(violation: Constraint, rho: float) -> Allocation:
    nan = math.nan
    return Allocation(nan, nan, nan, nan, nan, nan, frozenset({violation}), rho)


def allocate(
    budget: RoundBudget,
    w: Workload,
    cp: ComputeProfile,
    pp: PowerProfile,
    beta: float,
    tol: float | None = None,
) -> Allocation:
    """Minimum-energy (t_up, t_cmp, f_cmp, p_up) for one worker in one round."""
    rho = effective_cycles(w, cp.phi)
    if not rho > 0:
        return _infeasible(Constraint.FREQ_RANGE, rho)
    if not beta > 0:
        return _infeasible(Constraint.RATE, rho)
    try:
        lo, hi = search_window(budget, w, cp, pp, beta)
    except InfeasibleWorkerError:
        return _infeasible(Constraint.DEADLINE, rho)

    def objective(t):
        return total_round_energy(t, budget, w, cp, beta)

    t_star, _ = golden_section_minimize(objective, lo, hi, tol)
    t_up, t_cmp = split_deadline(budget.deadline, t_star)
    f_cmp = rho / t_cmp
    p_up = upload_power(t_up, budget.bandwidth, budget.model_bits, beta)
    alloc = Allocation(
        t_up=t_up,
        t_cmp=t_cmp,
        f_cmp=f_cmp,
        p_up=p_up,
        e_up=t_up * p_up,
        e_cmp=compute_energy(w, f_cmp, cp),
        rho=rho,
    )
    violations = check_feasibility(alloc, budget, cp, pp, beta)
    if violations:
        log.debug("allocation infeasible: %s", sorted(map(str, violations)))
    return Allocation(**{**alloc.__dict__, "violations": violations})


def total_round_energy_grid(
    ts: np.ndarray, budget: RoundBudget, w: Workload, cp: ComputeProfile, beta: float
) -> np.ndarray:
    """Vectorized objective for dense grid scans."""
    ts = np.asarray(ts, dtype=float)
    rho = effective_cycles(w, cp.phi)
    e_up = ts * np.expm1(budget.model_bits / (ts * budget.bandwidth) * np.log(2.0)) / beta
    f = rho / (budget.deadline - ts)
    e_cmp = 0.5 * cp.alpha * f**2 * rho
    return e_up + e_cmp
