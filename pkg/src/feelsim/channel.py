"""Multi-antenna uplink channel model.

Rician block fading with distance path loss, MMSE/MVDR receive combining and
the per-unit-power SINR coefficient ``beta`` used by the resource allocator.
All functions are pure; randomness only enters through explicit seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateChannelError, DomainError, SolveError
from .seeding import rng

SOLVE_RESIDUAL_TOL = 1e-8


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class ChannelParams:
    num_antennas: int = 8
    noise_power: float = 1e-6
    rician_factor_db: float = 8.0
    path_loss_exponent: float = 3.2
    reference_distance: float = 1.0
    # False zeroes the co-channel interference sum (pure TDMA reading)
    include_interference: bool = True

    def __post_init__(self):
        if self.num_antennas < 1:
            raise DomainError(f"num_antennas must be >= 1, got {self.num_antennas}")
        if not self.noise_power > 0:
            raise DomainError(f"noise_power must be > 0, got {self.noise_power}")
        if not self.path_loss_exponent > 0:
            raise DomainError(f"path_loss_exponent must be > 0, got {self.path_loss_exponent}")
        if not self.reference_distance > 0:
            raise DomainError(f"reference_distance must be > 0, got {self.reference_distance}")

    @property
    def k_factor(self) -> float:
        """Linear Rician K-factor."""
        return 10.0 ** (self.rician_factor_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    worker_id: int

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        if h.ndim != 1 or h.size == 0:
            raise DomainError("channel vector must be a non-empty 1-D array")
        if not np.all(np.isfinite(h)):
            raise DomainError(f"non-finite channel entries for worker {self.worker_id}")
        object.__setattr__(self, "h", h)

    @property
    def num_antennas(self) -> int:
        return self.h.size


@dataclass(frozen=True)
class Beamformer:
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=np.complex128))

    @property
    def norm_error(self) -> float:
        return abs(float(np.vdot(self.w, self.w).real) - 1.0)


def path_loss(distance: float, params: ChannelParams) -> float:
    return (params.reference_distance / distance) ** params.path_loss_exponent


def los_phase_ramp(num_antennas: int, angle: float) -> np.ndarray:
    """Unit-modulus steering vector of a half-wavelength ULA."""
    m = np.arange(num_antennas)
    return np.exp(1j * math.pi * m * math.sin(angle))


def sample_channels(
    geometry: Sequence[float],
    params: ChannelParams,
    seed: int,
    los_angles: Sequence[float] | None = None,
) -> list[ChannelRealization]:
    """Draw one Rician block-fading realization per worker.

    ``geometry`` holds worker-to-BS distances in metres. ``los_angles`` fixes
    each worker's line-of-sight direction; when omitted the angles are drawn
    from ``seed`` as well.
    """
    distances = [float(d) for d in geometry]
    for i, d in enumerate(distances):
        if not d > 0:
            raise DomainError(f"distance of worker {i} must be > 0, got {d}")
    if los_angles is not None and len(los_angles) != len(distances):
        raise DomainError("los_angles must have one entry per worker")

    M = params.num_antennas
    K = params.k_factor
    if math.isinf(K):
        los_w, nlos_w = 1.0, 0.0
    else:
        los_w, nlos_w = math.sqrt(K / (K + 1.0)), math.sqrt(1.0 / (K + 1.0))

    out = []
    for i, d in enumerate(distances):
        if los_angles is None:
            angle = rng(seed, "los", i).uniform(-math.pi / 2, math.pi / 2)
        else:
            angle = float(los_angles[i])
        g_los = los_phase_ramp(M, angle)
        z = rng(seed, "nlos", i).standard_normal((2, M))
        g_nlos = (z[0] + 1j * z[1]) / math.sqrt(2.0)
        g = los_w * g_los + nlos_w * g_nlos
        out.append(ChannelRealization(h=math.sqrt(path_loss(d, params)) * g, worker_id=i))
    return out


def interference_plus_noise(
    channels: Sequence[ChannelRealization],
    k: int,
    noise_power: float,
    include_interference: bool = True,
) -> np.ndarray:
    """Sum_{k' != k} h_k' h_k'^H + noise_power * I."""
    if not 0 <= k < len(channels):
        raise IndexError(f"worker index {k} out of range for {len(channels)} channels")
    M = channels[k].num_antennas
    sigma = noise_power * np.eye(M, dtype=np.complex128)
    if include_interference:
        for j, ch in enumerate(channels):
            if j != k:
                sigma += np.outer(ch.h, ch.h.conj())
    return sigma


def _phase_normalize(w: np.ndarray) -> np.ndarray:
    w = w / np.linalg.norm(w)
    mags = np.abs(w)
    first = int(np.argmax(mags > 1e-12 * mags.max()))
    mag = abs(w[first])
    w = w * (mag / w[first])
    w[first] = mag
    return w


def hermitian_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.linalg.solve(A, b)
    resid = np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), np.finfo(float).tiny)
    if not resid <= SOLVE_RESIDUAL_TOL:
        raise SolveError(f"Hermitian solve residual {resid:.3e} exceeds {SOLVE_RESIDUAL_TOL}")
    return x


def optimal_beamformer(
    channels: Sequence[ChannelRealization],
    k: int,
    noise_power: float,
    include_interference: bool = True,
) -> Beamformer:
    """SINR-maximizing unit-norm receive combiner for worker ``k``.

    The generalized Rayleigh quotient |h^H w|^2 / (w^H S w) has rank-one
    numerator, so its maximizer is S^{-1} h up to scale. The returned vector
    has unit norm and its first non-negligible entry real-positive.
    """
    h = channels[k].h
    if not np.linalg.norm(h) > 0:
        raise DegenerateChannelError(f"zero channel vector for worker {channels[k].worker_id}")
    sigma = interference_plus_noise(channels, k, noise_power, include_interference)
    w = hermitian_solve(sigma, h)
    return Beamformer(_phase_normalize(w))


def sinr_coefficient(
    channels: Sequence[ChannelRealization],
    k: int,
    w: Beamformer | np.ndarray,
    noise_power: float,
    include_interference: bool = True,
) -> float:
    """beta_k = |h_k^H w|^2 / (w^H S_k w), the SINR per watt of transmit power."""
    wv = w.w if isinstance(w, Beamformer) else np.asarray(w, dtype=np.complex128)
    sigma = interference_plus_noise(channels, k, noise_power, include_interference)
    num = abs(np.vdot(channels[k].h, wv)) ** 2
    den = float(np.vdot(wv, sigma @ wv).real)
    return float(num / den)


def uplink_bits(t_up: float, bandwidth: float, p_up: float, beta: float) -> float:
    """Bits delivered in ``t_up`` seconds: T * B * log2(1 + beta * P)."""
    return t_up * bandwidth * math.log1p(beta * p_up) / math.log(2.0)


def effective_betas(
    channels: Sequence[ChannelRealization], params: ChannelParams
) -> tuple[list[float], list[Beamformer]]:
    """Optimal beamformer and its beta for every worker in ``channels``."""
    betas, beams = [], []
    for k in range(len(channels)):
        w = optimal_beamformer(channels, k, params.noise_power, params.include_interference)
        beams.append(w)
        betas.append(sinr_coefficient(channels, k, w, params.noise_power, params.include_interference))
    return betas, beams
