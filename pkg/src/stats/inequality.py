from __future__ import annotations

import numpy as np
from scipy import special

from stats.normal import std_normal_cdf, std_normal_quantile
from utils.errors import DomainError, ValidationError


class InvalidGroupingError(ValidationError):
    """Grouped shares or class means cannot describe an income distribution."""


def _nonnegative(sigma, name: str = "sigma") -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if np.any(np.isnan(sigma)) or np.any(sigma < 0.0):
        raise DomainError(f"{name} must be nonnegative, got {sigma}")
    return sigma


def gini_from_sigma(sigma):
    """
    Gini coefficient of LN(μ, σ²): G = 2Φ(σ/√2) − 1, which equals erf(σ/2).
    """
    sigma = _nonnegative(sigma)
    gini = special.erf(sigma / 2.0)
    return float(gini) if gini.ndim == 0 else gini


def sigma_from_gini(gini):
    """Inverse of `gini_from_sigma` on [0, 1)."""
    gini = np.asarray(gini, dtype=float)
    if np.any(np.isnan(gini)) or np.any(gini < 0.0) or np.any(gini >= 1.0):
        raise DomainError(f"Gini must lie in [0, 1), got {gini}")
    sigma = 2.0 * special.erfinv(gini)
    return float(sigma) if sigma.ndim == 0 else sigma


def gini_from_h(h):
    """Gini of the income distribution whose log-variance is h (σ = exp(h/2))."""
    return gini_from_sigma(np.exp(np.asarray(h, dtype=float) / 2.0))


def lognormal_lorenz(sigma: float, p):
    """Lorenz curve of a lognormal: L(p) = Φ(Φ⁻¹(p) − σ)."""
    sigma = float(_nonnegative(sigma))
    return std_normal_cdf(np.asarray(std_normal_quantile(p)) - sigma)


def grouped_lorenz(bounds, means) -> tuple[np.ndarray, np.ndarray]:
    """
    Lorenz polyline of grouped data, assuming equal income within each class.
    Returns (p, L) including the origin.
    """
    bounds = np.asarray(bounds, dtype=float).ravel()
    means = np.asarray(means, dtype=float).ravel()
    if bounds.size == 0 or bounds.size != means.size:
        raise InvalidGroupingError(
            f"need one class mean per population share ({bounds.size} shares, {means.size} means)"
        )
    if np.any(np.diff(np.concatenate([[0.0], bounds])) <= 0.0):
        raise InvalidGroupingError(f"cumulative population shares must be strictly increasing: {bounds}")
    if not np.isclose(bounds[-1], 1.0, rtol=0.0, atol=1e-12):
        raise InvalidGroupingError(f"cumulative population shares must end at 1, got {bounds[-1]}")
    if np.any(~np.isfinite(means)) or np.any(means <= 0.0):
        raise InvalidGroupingError(f"class means must be strictly positive: {means}")
    if np.any(np.diff(means) < 0.0):
        raise InvalidGroupingError(f"class means must be nondecreasing across classes: {means}")

    widths = np.diff(np.concatenate([[0.0], bounds]))
    income = widths * means
    lorenz = np.concatenate([[0.0], np.cumsum(income) / income.sum()])
    return np.concatenate([[0.0], bounds]), lorenz


def grouped_gini(bounds, means) -> float:
    """Trapezoid Gini G = 1 − Σ (p_i − p_{i−1})(L_i + L_{i−1}) of grouped data."""
    p, lorenz = grouped_lorenz(bounds, means)
    gini = 1.0 - float(np.sum(np.diff(p) * (lorenz[1:] + lorenz[:-1])))
    # Equal class means give an exact zero up to rounding.
    return max(gini, 0.0)
