"""Brute-force cross-checks for the three numerical kernels.

* golden: allocator's golden-section upload time vs a dense grid argmin
* beam: closed-form beamformer vs random unit vectors and power iteration
* gradient: analytic cross-entropy gradient vs central finite differences

Each suite returns a report whose ``passed`` flag applies the tolerance the
suite was run with.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ChannelRealization,
    interference_plus_noise,
    optimal_beamformer,
    sinr_coefficient,
)
from .learning.data import LocalDataset
from .learning.model import ModelParams, ModelShape
from .learning.training import grad_local_loss, local_loss
from .resource import (
    ComputeProfile,
    PowerProfile,
    RoundBudget,
    Workload,
    allocate,
    effective_cycles,
    power_window,
    search_window,
    total_round_energy_grid,
    upload_window,
)
from .seeding import rng

log = logging.getLogger(__name__)

GOLDEN_GRID_POINTS = 10**6
BEAM_SAMPLES = 10**4
BEAM_RTOL = 1e-9
GRADIENT_STEP = 1e-5
GRADIENT_RTOL = 1e-5


@dataclass
class OracleReport:
    suite: str
    instances: int
    max_deviation: float
    tolerance: float
    failures: int
    skipped: int = 0
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.instances > self.skipped

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{self.suite}: {verdict} instances={self.instances} skipped={self.skipped} "
            f"failures={self.failures} max_deviation={self.max_deviation:.3e} "
            f"tolerance={self.tolerance:.3e}"
        )


# --- golden section vs grid ---------------------------------------------------


@dataclass(frozen=True)
class AllocationInstance:
    budget: RoundBudget
    workload: Workload
    compute: ComputeProfile
    power: PowerProfile
    beta: float


def random_allocation_instance(g: np.random.Generator) -> AllocationInstance:
    """A randomized single-worker instance with a non-degenerate search window."""
    while True:
        n = int(g.integers(20, 400))
        eps = int(g.integers(1, 6))
        inst = AllocationInstance(
            budget=RoundBudget(
                deadline=float(g.uniform(0.5, 10.0)),
                bandwidth=1e6,
                model_bits=float(g.uniform(1e4, 2e5)),
                energy_budget=1e3,
            ),
            workload=Workload(n, int(g.integers(0, n + 1)), eps),
            compute=ComputeProfile(
                f_min=float(g.uniform(5e7, 5e8)),
                f_max=float(g.uniform(1e9, 3e9)),
                alpha=2e-28 * float(g.uniform(0.5, 2.0)),
                phi=float(10 ** g.uniform(5.5, 7.0)),
            ),
            power=PowerProfile(1e-4, 0.1),
            beta=float(10 ** g.uniform(-1.5, 1.5)),
        )
        try:
            a0, b0 = upload_window(inst.budget, effective_cycles(inst.workload, inst.compute.phi), inst.compute)
        except ValueError:
            continue
        p_lo, p_hi = power_window(inst.budget, inst.beta, inst.power)
        lo, hi = max(a0, p_lo), min(b0, p_hi)
        if hi - lo > 1e-9 * inst.budget.deadline:
            return inst


def is_unimodal(values: np.ndarray) -> bool:
    """True if ``values`` falls then rises (either part may be empty), ignoring round-off."""
    d = np.diff(values)
    noise = 1e-12 * np.abs(values[1:]).max()
    d = d[np.abs(d) > noise]
    if d.size == 0:
        return True
    rising = np.flatnonzero(d > 0)
    return rising.size == 0 or bool(np.all(d[rising[0]:] > 0))


def golden_suite(
    instances: int = 50, seed: int = 2024, grid_points: int = GOLDEN_GRID_POINTS
) -> OracleReport:
    g = rng(seed, "golden")
    worst, failures, skipped, details = 0.0, 0, 0, []
    for i in range(instances):
        inst = random_allocation_instance(g)
        lo, hi = search_window(inst.budget, inst.workload, inst.compute, inst.power, inst.beta)
        alloc = allocate(inst.budget, inst.workload, inst.compute, inst.power, inst.beta)
        grid = np.linspace(lo, hi, grid_points)
        energy = total_round_energy_grid(grid, inst.budget, inst.workload, inst.compute, inst.beta)
        if not is_unimodal(energy):
            log.warning("golden instance %d is not unimodal on the grid; skipped", i)
            skipped += 1
            continue
        t_grid = float(grid[int(np.argmin(energy))])
        tol = 1e-6 * (hi - lo)
        allowed = max(tol, 2.0 * (hi - lo) / (grid_points - 1))
        dev = abs(alloc.t_up - t_grid)
        # deviation reported in units of the allowed band
        worst = max(worst, dev / allowed)
        failures += dev > allowed
        details.append((i, alloc.t_up, t_grid, allowed))
    return OracleReport("golden", instances, worst, 1.0, failures, skipped, details)


# --- beamformer vs sampling ---------------------------------------------------


def random_unit_vectors(g: np.random.Generator, count: int, M: int) -> np.ndarray:
    z = g.standard_normal((count, M)) + 1j * g.standard_normal((count, M))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sinr_batch(h: np.ndarray, sigma: np.ndarray, V: np.ndarray) -> np.ndarray:
    """beta for each row of ``V`` (rows are unit combining vectors)."""
    num = np.abs(V.conj() @ h) ** 2
    den = np.einsum("ij,jk,ik->i", V.conj(), sigma, V).real
    return num / den


def power_iteration_beamformer(h: np.ndarray, sigma: np.ndarray, iters: int = 200) -> np.ndarray:
    """Dominant eigenvector of S^{-1} h h^H by power iteration.

    S^{-1} h h^H is the conjugate transpose of h h^H S^{-1}; its right
    eigenvector is the combining vector that maximizes the SINR.
    """
    A = np.linalg.solve(sigma, np.outer(h, h.conj()))
    v = np.ones(h.size, dtype=np.complex128) / math.sqrt(h.size)
    for _ in range(iters):
        v = A @ v
        v /= np.linalg.norm(v)
    return v


def random_channels(g: np.random.Generator, M: int, K: int) -> list[ChannelRealization]:
    scales = 10 ** g.uniform(-2.0, 0.0, K)
    return [
        ChannelRealization(scales[k] * (g.standard_normal(M) + 1j * g.standard_normal(M)) / math.sqrt(2), k)
        for k in range(K)
    ]


def beam_suite(
    instances: int = 20,
    seed: int = 7,
    M: int = 8,
    K: int = 8,
    samples: int = BEAM_SAMPLES,
    noise_power: float = 1e-3,
) -> OracleReport:
    g = rng(seed, "beam")
    worst, failures, details = -math.inf, 0, []
    for i in range(instances):
        channels = random_channels(g, M, K)
        k = int(g.integers(0, K))
        sigma = interference_plus_noise(channels, k, noise_power)
        w = optimal_beamformer(channels, k, noise_power)
        beta_star = sinr_coefficient(channels, k, w, noise_power)
        best_sampled = float(sinr_batch(channels[k].h, sigma, random_unit_vectors(g, samples, M)).max())
        excess = (best_sampled - beta_star) / beta_star
        beta_pi = float(sinr_batch(channels[k].h, sigma, power_iteration_beamformer(channels[k].h, sigma)[None, :])[0])
        eig_gap = abs(beta_pi - beta_star) / beta_star
        worst = max(worst, excess)
        failures += (excess > BEAM_RTOL) + (eig_gap > BEAM_RTOL) + (w.norm_error > 1e-9)
        details.append((i, beta_star, best_sampled, eig_gap))
    return OracleReport("beam", instances, worst, BEAM_RTOL, failures, 0, details)


# --- analytic vs finite-difference gradient ----------------------------------


def finite_difference_grad(params: ModelParams, data: LocalDataset, step: float = GRADIENT_STEP) -> np.ndarray:
    theta = params.theta
    out = np.empty_like(theta)
    for j in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[j] += step
        down[j] -= step
        out[j] = (local_loss(params.with_theta(up), data) - local_loss(params.with_theta(down), data)) / (2 * step)
    return out


def gradient_relative_error(params: ModelParams, data: LocalDataset, step: float = GRADIENT_STEP) -> float:
    ga = grad_local_loss(params, data)
    gn = finite_difference_grad(params, data, step)
    scale = max(np.linalg.norm(ga), np.linalg.norm(gn), np.finfo(float).tiny)
    return float(np.linalg.norm(ga - gn) / scale)


def random_gradient_case(g: np.random.Generator):
    shape = ModelShape(int(g.integers(2, 7)), int(g.integers(2, 6)), int(g.integers(2, 5)))
    n = int(g.integers(1, 12))
    params = ModelParams(0.5 * g.standard_normal(shape.num_params), shape)
    data = LocalDataset(g.standard_normal((n, shape.input_dim)), g.integers(0, shape.classes, n))
    return params, data


def gradient_suite(draws: int = 20, seed: int = 11) -> OracleReport:
    g = rng(seed, "gradient")
    errs = [gradient_relative_error(*random_gradient_case(g)) for _ in range(draws)]
    worst = max(errs)
    return OracleReport(
        "gradient", draws, worst, GRADIENT_RTOL, sum(e > GRADIENT_RTOL for e in errs), 0, errs
    )


SUITES = {"golden": golden_suite, "beam": beam_suite, "gradient": gradient_suite}
