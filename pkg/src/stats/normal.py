"""Standard-normal special functions with domain checks.

scipy's `ndtr`/`ndtri` are accurate to machine precision across the whole
real line, including the tails that drive the conditioning of W.
"""
from __future__ import annotations

import numpy as np
from scipy import special

from utils.errors import DomainError

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _finite(z, name: str = "z") -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise DomainError(f"{name} must be finite, got {z}")
    return z


def _scalar_or_array(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def std_normal_cdf(z):
    """Φ(z)."""
    return _scalar_or_array(special.ndtr(_finite(z)))


def std_normal_pdf(z):
    """φ(z) = exp(-z²/2) / √(2π)."""
    z = _finite(z)
    return _scalar_or_array(np.exp(-0.5 * z * z - _LOG_SQRT_2PI))


def std_normal_quantile(p):
    """Φ⁻¹(p) for p strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
        raise DomainError(f"probability must lie strictly inside (0, 1), got {p}")
    return _scalar_or_array(special.ndtri(p))
