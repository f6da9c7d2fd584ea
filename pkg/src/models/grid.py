from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from utils.errors import DomainError

# Probabilities outside this band are rejected rather than clipped.
PROB_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class QuantileGrid:
    """Cumulative probabilities p_1 < ... < p_k of the observed bracket endpoints."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.atleast_1d(np.asarray(self.probs, dtype=float)).copy()
        if probs.ndim != 1 or probs.size == 0:
            raise DomainError("QuantileGrid needs a non-empty vector of probabilities")
        if not np.all(np.isfinite(probs)):
            raise DomainError(f"QuantileGrid probabilities must be finite: {probs}")
        if np.any(probs <= 0.0) or np.any(probs >= 1.0):
            raise DomainError(f"QuantileGrid probabilities must lie in (0, 1): {probs}")
        if np.any(np.diff(probs) <= 0.0):
            raise DomainError(f"QuantileGrid probabilities must be strictly increasing: {probs}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_counts(cls, cum_counts, total: float) -> QuantileGrid:
        return cls(np.asarray(cum_counts, dtype=float) / float(total))

    @property
    def count(self) -> int:
        return int(self.probs.size)

    @property
    def quantiles(self) -> np.ndarray:
        """u_i = Φ⁻¹(p_i)."""
        return special.ndtri(self.probs)

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return f"QuantileGrid(k={self.count}, probs={np.round(self.probs, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class OrderStatCov:
    """Asymptotic covariance W of the standardized selected order statistics."""

    w: np.ndarray
    grid: QuantileGrid

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        k = self.grid.count
        if w.shape != (k, k):
            raise DomainError(f"W must be {k}x{k}, got {w.shape}")
        if not np.allclose(w, w.T, rtol=1e-12, atol=0.0):
            raise DomainError("W must be symmetric")
        if np.any(np.diag(w) <= 0.0):
            raise DomainError("W must have a strictly positive diagonal")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
