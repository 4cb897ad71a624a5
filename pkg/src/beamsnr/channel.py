"""Narrowband sparse multipath channel synthesis.

Geometric uniform-linear-array model: ``h = sum_l g_l a(phi_l)`` with
``a(phi)[m] = exp(-j pi phi m)``. Spatial frequencies are drawn off-grid,
so the beamspace image of ``h`` leaks into neighbouring bins.

All randomness comes from an explicitly passed :class:`numpy.random.Generator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ChannelConfig:
    """Parameters of the multipath channel.

    Path ``l`` (0-based) has gain ``g_l ~ CN(0, decay**l)``; spatial frequencies
    are uniform on ``phi_range``.
    """

    M: int
    L: int = 3
    decay: float = 0.5
    phi_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if not is_power_of_two(self.M) or self.M < 2:
            raise InvalidArgumentError(f"M must be a power of two >= 2, got {self.M}")
        if not 1 <= self.L <= self.M // 4:
            raise InvalidArgumentError(f"L must satisfy 1 <= L <= M/4, got L={self.L}, M={self.M}")
        if not 0.0 < self.decay <= 1.0:
            raise InvalidArgumentError(f"decay must be in (0, 1], got {self.decay}")
        lo, hi = self.phi_range
        if not lo < hi:
            raise InvalidArgumentError(f"phi_range must be increasing, got {self.phi_range}")


@dataclass(frozen=True)
class IdealSparseSpec:
    """An exactly ``k``-sparse beamspace vector with equal-power nonzeros."""

    M: int
    k: int
    power: float = 100.0


def steering_vector(phi: float, M: int) -> np.ndarray:
    """ULA response ``exp(-j pi phi m)`` for ``m = 0 .. M-1``."""
    if not math.isfinite(phi):
        raise InvalidArgumentError(f"phi must be finite, got {phi}")
    if M < 1:
        raise InvalidArgumentError(f"M must be >= 1, got {M}")
    return np.exp(-1j * np.pi * phi * np.arange(M))


def synth_channel(cfg: ChannelConfig, rng: np.random.Generator, gains=None, phis=None) -> np.ndarray:
    """Draw one channel realization.

    ``gains`` and ``phis`` override the random draws (useful for worked
    examples); when given they must have length ``cfg.L``.
    """
    if phis is None:
        phis = rng.uniform(cfg.phi_range[0], cfg.phi_range[1], cfg.L)
    if gains is None:
        scale = np.sqrt(0.5 * cfg.decay ** np.arange(cfg.L))
        gains = scale * (rng.standard_normal(cfg.L) + 1j * rng.standard_normal(cfg.L))
    phis = np.asarray(phis, dtype=float)
    gains = np.asarray(gains, dtype=complex)
    if phis.shape != (cfg.L,) or gains.shape != (cfg.L,):
        raise InvalidArgumentError("gains and phis must have length L")
    steer = np.exp(-1j * np.pi * phis[:, None] * np.arange(cfg.M))
    return gains @ steer


def qpsk_symbol(rng: np.random.Generator) -> complex:
    """A uniformly random unit-modulus QPSK symbol."""
    q = rng.integers(4)
    return complex(np.exp(1j * (np.pi / 4 + np.pi / 2 * q)))


def scale_to_snr(h: np.ndarray, s: complex, rho: float, N0: float = 1.0) -> np.ndarray:
    """Return ``x = c h s`` with ``c > 0`` such that ``mean(|x|**2) == rho * N0``.

    The scaling is per realization, so the realized signal power is the
    ground truth for that trial.
    """
    if rho < 0:
        raise InvalidArgumentError(f"rho must be >= 0, got {rho}")
    if N0 <= 0:
        raise InvalidArgumentError(f"N0 must be > 0, got {N0}")
    h = np.asarray(h, dtype=complex)
    energy = float(np.vdot(h, h).real)
    if energy == 0.0:
        raise DegenerateInputError("cannot scale a zero channel to a target SNR")
    if rho == 0:
        return np.zeros_like(h)
    x = h * s
    x *= math.sqrt(rho * N0 * h.size / float(np.vdot(x, x).real))
    return x


def add_awgn(x: np.ndarray, N0: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise with per-element variance ``N0``."""
    if N0 < 0:
        raise InvalidArgumentError(f"N0 must be >= 0, got {N0}")
    x = np.asarray(x, dtype=complex)
    if N0 == 0:
        return x.copy()
    n = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + math.sqrt(N0 / 2) * n


def ideal_sparse_signal(spec: IdealSparseSpec, rng: np.random.Generator):
    """Draw an exactly ``k``-sparse beamspace vector.

    Returns ``(xbar, noise_idx, signal_idx)`` where the index arrays partition
    ``0 .. M-1``.
    """
    if spec.M < 1 or spec.k < 0 or spec.k > spec.M:
        raise InvalidArgumentError(f"need 0 <= k <= M, got k={spec.k}, M={spec.M}")
    if spec.power <= 0:
        raise InvalidArgumentError(f"power must be > 0, got {spec.power}")
    signal_idx = np.sort(rng.choice(spec.M, size=spec.k, replace=False))
    mask = np.zeros(spec.M, dtype=bool)
    mask[signal_idx] = True
    xbar = np.zeros(spec.M, dtype=complex)
    phases = rng.uniform(0.0, 2 * np.pi, spec.k)
    xbar[signal_idx] = math.sqrt(spec.power) * np.exp(1j * phases)
    return xbar, np.flatnonzero(~mask), signal_idx
