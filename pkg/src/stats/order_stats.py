from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from models.grid import PROB_FLOOR, OrderStatCov, QuantileGrid
from stats.normal import std_normal_pdf
from utils.errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)


class IllConditionedGridError(NumericalError):
    """Grid probability so close to 0 or 1 that W cannot be formed reliably."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class UnderdeterminedError(ValidationError):
    """Too few bracket endpoints to identify location and scale."""


class GlsFitError(NumericalError):
    """Static GLS fit produced an unusable scale estimate."""


def order_stat_covariance(grid: QuantileGrid) -> OrderStatCov:
    """
    W with w_ij = p_i(1 − p_j) / (φ(u_i) φ(u_j)) for i ≤ j, u_i = Φ⁻¹(p_i).
    """
    probs = grid.probs
    outside = np.flatnonzero((probs < PROB_FLOOR) | (probs > 1.0 - PROB_FLOOR))
    if outside.size:
        i = int(outside[0])
        raise IllConditionedGridError(
            f"grid probability p[{i}] = {probs[i]:.3g} lies outside "
            f"[{PROB_FLOOR:g}, {1 - PROB_FLOOR:g}]",
            index=i,
        )
    density = std_normal_pdf(grid.quantiles)
    density = np.atleast_1d(density)
    tiny = np.flatnonzero(density < np.finfo(float).tiny ** 0.25)
    if tiny.size:
        i = int(tiny[0])
        raise IllConditionedGridError(f"φ(Φ⁻¹(p[{i}])) underflows", index=i)

    low = np.minimum.outer(probs, probs)
    high = np.maximum.outer(probs, probs)
    w = low * (1.0 - high) / np.outer(density, density)
    try:
        np.linalg.cholesky(w)
    except np.linalg.LinAlgError as e:
        raise IllConditionedGridError("W is not positive definite for this grid") from e
    return OrderStatCov(w=w, grid=grid)


@dataclass(frozen=True)
class GlsFit:
    """Per-period location/scale estimate of ln x = μ + σu + error."""

    mu: float
    sigma: float
    mu_se: float
    sigma_se: float

    @property
    def h(self) -> float:
        return 2.0 * float(np.log(self.sigma))


def static_gls_fit(x, grid: QuantileGrid, n: float) -> GlsFit:
    """
    GLS of ln x on (1, u) with weight W⁻¹. Since √n(ln x − μ − σu) ~ N(0, σ²W),
    the estimate's covariance is (σ²/n)(X′W⁻¹X)⁻¹, evaluated at σ̂.
    """
    x = np.asarray(x, dtype=float).ravel()
    if grid.count < 2:
        raise UnderdeterminedError(f"static fit needs at least 2 endpoints, got {grid.count}")
    if x.size != grid.count:
        raise ValidationError(f"{x.size} endpoints for a grid of {grid.count} probabilities")
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise ValidationError(f"endpoints must be positive: {x}")

    cov = order_stat_covariance(grid)
    design = np.column_stack([np.ones(grid.count), grid.quantiles])
    chol = np.linalg.cholesky(cov.w)
    design_t = linalg.solve_triangular(chol, design, lower=True)
    target_t = linalg.solve_triangular(chol, np.log(x), lower=True)
    gram = design_t.T @ design_t
    gram_chol = linalg.cho_factor(gram, lower=True)
    mu_hat, sigma_hat = linalg.cho_solve(gram_chol, design_t.T @ target_t)
    if not np.isfinite(sigma_hat) or sigma_hat <= 0.0:
        raise GlsFitError(f"non-positive scale estimate σ̂ = {sigma_hat:.4g}")

    param_cov = sigma_hat**2 / float(n) * linalg.cho_solve(gram_chol, np.eye(2))
    return GlsFit(
        mu=float(mu_hat),
        sigma=float(sigma_hat),
        mu_se=float(np.sqrt(param_cov[0, 0])),
        sigma_se=float(np.sqrt(param_cov[1, 1])),
    )
