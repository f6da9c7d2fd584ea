from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from data.assemble import UnknownVariableError
from models import IrfBands, IrfSpec, PosteriorDraws
from utils.errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)


class DecompositionError(NumericalError):
    """Covariance matrix is not symmetric positive definite."""


class NonStationaryDrawError(NumericalError):
    """VAR draw with spectral radius of B at or above one."""


class AnalysisError(NumericalError):
    """No usable posterior draw left to summarise."""


class PairingError(ValidationError):
    """Draw sets cannot be paired by index."""


def is_stationary(b_mat: np.ndarray) -> tuple[bool, float]:
    b_mat = np.asarray(b_mat, dtype=float)
    if b_mat.ndim != 2 or b_mat.shape[0] != b_mat.shape[1]:
        raise ValidationError(f"B must be square, got shape {b_mat.shape}")
    radius = float(np.max(np.abs(np.linalg.eigvals(b_mat)))) if b_mat.size else 0.0
    return radius < 1.0, radius


def cholesky_lower(sigma_mat: np.ndarray) -> np.ndarray:
    """Lower-triangular A with positive diagonal and Σ = AA′."""
    sigma_mat = np.asarray(sigma_mat, dtype=float)
    if sigma_mat.ndim != 2 or sigma_mat.shape[0] != sigma_mat.shape[1]:
        raise DecompositionError(f"Σ must be square, got shape {sigma_mat.shape}")
    if not np.allclose(sigma_mat, sigma_mat.T, rtol=1e-10, atol=0.0):
        raise DecompositionError("Σ is not symmetric")
    try:
        return np.linalg.cholesky(sigma_mat)
    except np.linalg.LinAlgError as e:
        raise DecompositionError(f"Σ is not positive definite: {e}") from e


def variable_indices(names: Iterable[str], ordering: Sequence[str]) -> List[int]:
    ordering = list(ordering)
    unknown = [name for name in names if name not in ordering]
    if unknown:
        raise UnknownVariableError(f"unknown variables {unknown}; ordering is {ordering}")
    return [ordering.index(name) for name in names]


def shutdown_channel(
    b_mat: np.ndarray, a_mat: np.ndarray, off: Iterable[str], ordering: Sequence[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Zero the rows of B and A belonging to the switched-off variables. Inputs are not modified."""
    rows = variable_indices(list(off), ordering)
    b_out = np.array(b_mat, dtype=float)
    a_out = np.array(a_mat, dtype=float)
    b_out[rows, :] = 0.0
    a_out[rows, :] = 0.0
    return b_out, a_out


def compute_irf(
    b_mat: np.ndarray,
    sigma_mat: np.ndarray,
    spec: IrfSpec,
    ordering: Sequence[str],
    off: Sequence[str] = (),
) -> np.ndarray:
    """
    Responses (m x horizon+1) to a recursive shock in `spec.shock_variable`.
    The Cholesky column is scaled so the shocked variable moves by exactly
    `spec.scale` at impact in the unrestricted system; a shut-down pair reuses
    that scaling. The intercept plays no part since responses are deviations.
    """
    stationary, radius = is_stationary(b_mat)
    if not stationary:
        raise NonStationaryDrawError(f"spectral radius {radius:.4f} >= 1")
    (j,) = variable_indices([spec.shock_variable], ordering)
    a_mat = cholesky_lower(sigma_mat)
    if off:
        b_use, a_use = shutdown_channel(b_mat, a_mat, off, ordering)
    else:
        b_use, a_use = np.asarray(b_mat, dtype=float), a_mat

    responses = np.empty((len(ordering), spec.horizon + 1))
    responses[:, 0] = a_use[:, j] / a_mat[j, j] * spec.scale
    for s in range(1, spec.horizon + 1):
        responses[:, s] = b_use @ responses[:, s - 1]
    return responses


def draw_responses(
    draws: PosteriorDraws, spec: IrfSpec, off: Sequence[str] = ()
) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-draw IRFs, NaN for non-stationary draws. Returns (responses D x m x
    horizon+1, stationary mask).
    """
    variable_indices([spec.shock_variable, *off], draws.variables)
    b_all = draws.b_matrices()
    responses = np.full((draws.count, draws.m, spec.horizon + 1), np.nan)
    usable = np.zeros(draws.count, dtype=bool)
    for d in range(draws.count):
        try:
            responses[d] = compute_irf(b_all[d], draws.sigma[d], spec, draws.variables, off)
            usable[d] = True
        except NonStationaryDrawError:
            continue
    return responses, usable


def posterior_irf_bands(
    draws: PosteriorDraws, spec: IrfSpec, off: Optional[Sequence[str]] = None
) -> IrfBands:
    off = tuple(off or ())
    if draws.count == 0:
        raise AnalysisError("no posterior draws")
    responses, usable = draw_responses(draws, spec, off)
    skipped = int(draws.count - usable.sum())
    if not usable.any():
        raise AnalysisError(f"all {draws.count} draws are non-stationary")
    if skipped:
        logger.warning(f"Skipped {skipped} of {draws.count} non-stationary draws")
    bands = np.quantile(responses[usable], spec.quantiles, axis=0)
    logger.info(
        f"IRF bands for a {spec.scale:+g} shock to {spec.shock_variable} "
        f"over {spec.horizon} quarters, shutdown={list(off) or 'none'}, {int(usable.sum())} draws"
    )
    return IrfBands(
        responses=np.moveaxis(bands, 0, -1),
        variables=draws.variables,
        spec=spec,
        shutdown=off,
        draws_used=int(usable.sum()),
        skipped=skipped,
        meta={
            "skipped_draws": skipped,
            "draws": draws.count,
            "method": draws.meta.get("method"),
            "seed": draws.meta.get("seed"),
        },
    )


@dataclass(frozen=True)
class ImpactScatter:
    """Paired responses of one variable at one horizon, one row per draw index."""

    frame: pd.DataFrame
    variable: str
    horizon: int

    @property
    def below_share(self) -> float:
        """Share of pairs with response_b < response_a (below the 45-degree line)."""
        if self.frame.empty:
            return 0.0
        return float(np.mean(self.frame["response_b"].to_numpy() < self.frame["response_a"].to_numpy()))

    def write(self, path: Path) -> Path:
        self.frame.to_csv(path, index=False, float_format="%.10g")
        return Path(path)


def impact_scatter(
    draws_a: PosteriorDraws,
    draws_b: PosteriorDraws,
    spec: IrfSpec,
    variable: str,
    horizon: int = 1,
) -> ImpactScatter:
    if draws_a.count != draws_b.count:
        raise PairingError(f"cannot pair {draws_a.count} draws with {draws_b.count}")
    if not 0 <= horizon <= spec.horizon:
        raise ValidationError(f"horizon {horizon} outside 0..{spec.horizon}")
    (ia,) = variable_indices([variable], draws_a.variables)
    (ib,) = variable_indices([variable], draws_b.variables)
    resp_a, ok_a = draw_responses(draws_a, spec)
    resp_b, ok_b = draw_responses(draws_b, spec)
    keep = ok_a & ok_b
    if not keep.all():
        logger.warning(f"Dropping {int((~keep).sum())} pairs with a non-stationary side")
    frame = pd.DataFrame(
        {
            "draw": np.flatnonzero(keep),
            "response_a": resp_a[keep, ia, horizon],
            "response_b": resp_b[keep, ib, horizon],
        }
    )
    return ImpactScatter(frame=frame, variable=variable, horizon=horizon)


def write_scatter(scatter: ImpactScatter, path: Path) -> Path:
    return scatter.write(path)


def band_widths(bands: IrfBands, variable: str) -> pd.DataFrame:
    """Per-horizon lower, median, upper and width (upper − lower) of one variable's bands."""
    lower = bands.lower(variable)
    upper = bands.upper(variable)
    mid = len(bands.spec.quantiles) // 2
    return pd.DataFrame(
        {
            "horizon": np.arange(bands.spec.horizon + 1),
            "lower": lower,
            "median": bands.responses[bands.index(variable), :, mid],
            "upper": upper,
            "width": upper - lower,
        }
    )
