"""Comparison noise-power estimators operating on one beamspace sample.

All three are reconstructions: a Gaussian MAD scale estimate on the real and
imaginary parts, the same followed by one trimmed, bias-corrected mean, and an
iterated trimmed mean on the sorted powers. Trimmed means are corrected for
truncation of an exponential distribution at the threshold ``T``:

    E[p | p <= T] = mu - T / (exp(T / mu) - 1)

which is inverted for ``mu`` by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beamspace import SortedPowerVector
from .errors import InvalidArgumentError

MAD_GAUSS = 0.67449
BISECTION_STEPS = 20


@dataclass(frozen=True)
class BaselineConfig:
    mad_consistency: float = MAD_GAUSS
    trunc_alpha: float = 0.01
    trunc_iters: int = 5

    def __post_init__(self):
        if not self.mad_consistency > 0:
            raise InvalidArgumentError("mad_consistency must be positive")
        if not 0.0 < self.trunc_alpha < 1.0:
            raise InvalidArgumentError("trunc_alpha must be in (0, 1)")
        if int(self.trunc_iters) != self.trunc_iters or self.trunc_iters < 1:
            raise InvalidArgumentError("trunc_iters must be a positive integer")

    @property
    def trim_factor(self) -> float:
        return -math.log(self.trunc_alpha)


def truncated_exp_mean(mu, T):
    """Mean of an exponential with mean ``mu`` conditioned on ``p <= T``."""
    mu = np.asarray(mu, dtype=float)
    T = np.asarray(T, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = mu - T / np.expm1(T / mu)
    return np.where(mu > 0, out, 0.0)


def invert_truncated_mean(kept_mean, T, steps: int = BISECTION_STEPS):
    """Solve ``truncated_exp_mean(mu, T) = kept_mean`` on ``(0, 10 * kept_mean]``."""
    kept_mean = np.asarray(kept_mean, dtype=float)
    lo = np.zeros_like(kept_mean)
    hi = 10.0 * kept_mean
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = truncated_exp_mean(mid, T) < kept_mean
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _lower_median(A):
    A = np.sort(A, axis=-1)
    return A[..., (A.shape[-1] - 1) // 2]


def _check_width(M):
    if M < 2:
        raise InvalidArgumentError(f"need M >= 2, got {M}")


def mad_batch(Ybar, cfg: BaselineConfig = BaselineConfig()) -> np.ndarray:
    """Row-wise MAD estimate ``2 (MAD / c)^2`` over the ``2M`` real components."""
    Ybar = np.atleast_2d(np.asarray(Ybar, dtype=complex))
    _check_width(Ybar.shape[1])
    v = np.concatenate([Ybar.real, Ybar.imag], axis=1)
    med = _lower_median(v)
    mad = _lower_median(np.abs(v - med[:, None]))
    sigma = mad / cfg.mad_consistency
    return 2.0 * sigma * sigma


def _trimmed_correct(P, T):
    keep = P <= T[:, None]
    count = keep.sum(axis=1)
    kept_mean = np.where(keep, P, 0.0).sum(axis=1) / np.maximum(count, 1)
    return invert_truncated_mean(kept_mean, T), count


def mad_refined_batch(Ybar, cfg: BaselineConfig = BaselineConfig()) -> np.ndarray:
    """MAD estimate refined by one trimmed, truncation-corrected mean of the powers."""
    Ybar = np.atleast_2d(np.asarray(Ybar, dtype=complex))
    n0 = mad_batch(Ybar, cfg)
    P = Ybar.real ** 2 + Ybar.imag ** 2
    mu, count = _trimmed_correct(P, cfg.trim_factor * n0)
    return np.where(count > 0, mu, n0)


def truncated_mean_batch(P_sorted, cfg: BaselineConfig = BaselineConfig()) -> np.ndarray:
    """Iterated trimmed mean starting from the full mean of each row."""
    P = np.atleast_2d(np.asarray(P_sorted, dtype=float))
    _check_width(P.shape[1])
    mu = P.mean(axis=1)
    for _ in range(cfg.trunc_iters):
        new, count = _trimmed_correct(P, cfg.trim_factor * mu)
        mu = np.where(count > 0, new, mu)
    return mu


def mad_noise_power(ybar, cfg: BaselineConfig = BaselineConfig()) -> float:
    return float(mad_batch(np.asarray(ybar)[None, :], cfg)[0])


def mad_refined_noise_power(ybar, cfg: BaselineConfig = BaselineConfig()) -> float:
    return float(mad_refined_batch(np.asarray(ybar)[None, :], cfg)[0])


def truncated_mean_noise_power(sorted_powers, cfg: BaselineConfig = BaselineConfig()) -> float:
    if isinstance(sorted_powers, SortedPowerVector):
        sorted_powers = sorted_powers.values
    return float(truncated_mean_batch(np.asarray(sorted_powers)[None, :], cfg)[0])
