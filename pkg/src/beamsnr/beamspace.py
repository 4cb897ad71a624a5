"""Floating-point front end: unitary spatial DFT and sorted element powers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SortedPowerVector:
    """Element powers in ascending order, with their total ``S_M``."""

    values: np.ndarray
    total: float

    @classmethod
    def from_values(cls, values) -> "SortedPowerVector":
        """Wrap powers that are already sorted; they are not re-sorted."""
        v = np.ascontiguousarray(values, dtype=float)
        return cls(v, float(v.sum()))

    def __len__(self):
        return self.values.size

    def scaled(self, c: float) -> "SortedPowerVector":
        v = self.values * c
        return SortedPowerVector(v, float(v.sum()))


def dft_unitary(y) -> np.ndarray:
    """Unitary DFT, ``F[k, m] = exp(-2j pi k m / M) / sqrt(M)``.

    Works along the last axis, so a ``(trials, M)`` batch is transformed row-wise.
    """
    return np.fft.fft(np.asarray(y, dtype=complex), axis=-1, norm="ortho")


def element_powers(ybar) -> np.ndarray:
    ybar = np.asarray(ybar)
    return ybar.real**2 + ybar.imag**2


def power_sort(ybar) -> SortedPowerVector:
    """Sort ``|ybar|**2`` ascending."""
    p = np.sort(element_powers(ybar), kind="stable")
    return SortedPowerVector(p, float(p.sum()))


def power_sort_batch(Ybar) -> np.ndarray:
    """Row-wise ascending sort of element powers for a ``(trials, M)`` batch."""
    return np.sort(element_powers(Ybar), axis=-1)
