from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Sequence

import numpy as np
import pandas as pd

from models import PosteriorDraws
from stats.inequality import gini_from_h
from utils.errors import DataIOError, ValidationError
from utils.hashing import write_json

logger = logging.getLogger(__name__)

DRAW_FILES = ("mu.csv", "h.csv", "beta.csv", "sigma.csv", "meta.json")


def coefficient_labels(variables: Sequence[str]) -> List[str]:
    """Column names for β = vec((α, B)′): per equation, the intercept then the lags."""
    labels = []
    for lhs in variables:
        labels.append(f"alpha[{lhs}]")
        labels.extend(f"B[{lhs}:{rhs}]" for rhs in variables)
    return labels


def sigma_labels(variables: Sequence[str]) -> List[str]:
    return [f"Sigma[{a}:{b}]" for a in variables for b in variables]


def write_draws(draws: PosteriorDraws, directory: Path) -> List[Path]:
    """One CSV per block, one row per retained draw, plus the sampler metadata."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frames = {
        "mu.csv": pd.DataFrame(draws.mu, columns=draws.dates),
        "h.csv": pd.DataFrame(draws.h, columns=draws.dates),
        "beta.csv": pd.DataFrame(draws.beta, columns=coefficient_labels(draws.variables)),
        "sigma.csv": pd.DataFrame(
            draws.sigma.reshape(draws.count, -1), columns=sigma_labels(draws.variables)
        ),
    }
    written = []
    for name, frame in frames.items():
        path = directory / name
        frame.index.name = "draw"
        frame.to_csv(path, float_format="%.10g")
        written.append(path)
    meta_path = directory / "meta.json"
    write_json(meta_path, {"variables": draws.variables, "dates": draws.dates, "meta": draws.meta})
    written.append(meta_path)
    logger.info(f"Wrote {draws.count} draws to {directory}")
    return written


def read_draws(directory: Path) -> PosteriorDraws:
    directory = Path(directory)
    missing = [name for name in DRAW_FILES if not (directory / name).exists()]
    if missing:
        raise DataIOError(f"{directory} is not a draws directory: missing {missing}")
    try:
        header = json.loads((directory / "meta.json").read_text())
        variables = header["variables"]
        frames = {
            name: pd.read_csv(directory / name, index_col="draw")
            for name in ("mu.csv", "h.csv", "beta.csv", "sigma.csv")
        }
    except (KeyError, ValueError, pd.errors.ParserError) as e:
        raise ValidationError(f"cannot read draws from {directory}: {e}") from e
    if list(frames["beta.csv"].columns) != coefficient_labels(variables):
        raise ValidationError(f"beta.csv columns do not match variables {variables}")
    m = len(variables)
    sigma = frames["sigma.csv"].to_numpy(dtype=float)
    return PosteriorDraws(
        mu=frames["mu.csv"].to_numpy(dtype=float),
        h=frames["h.csv"].to_numpy(dtype=float),
        beta=frames["beta.csv"].to_numpy(dtype=float),
        sigma=sigma.reshape(sigma.shape[0], m, m),
        variables=variables,
        dates=header.get("dates", list(frames["h.csv"].columns)),
        meta=header.get("meta", {}),
    )


def estimated_inequality_frame(
    draws: PosteriorDraws, quantiles: Sequence[float] = (0.16, 0.5, 0.84)
) -> pd.DataFrame:
    """
    Per-period posterior quantiles of h_t, σ_t = exp(h_t/2) and the implied
    lognormal Gini.
    """
    quantiles = tuple(quantiles)
    h_q = np.quantile(draws.h, quantiles, axis=0)
    frame = pd.DataFrame({"date": draws.dates})
    for i, q in enumerate(quantiles):
        tag = f"q{round(q * 100):02d}"
        frame[f"h_{tag}"] = h_q[i]
        # σ and the Gini are monotone in h, so their quantiles map through.
        frame[f"sigma_{tag}"] = np.exp(h_q[i] / 2.0)
        frame[f"gini_{tag}"] = gini_from_h(h_q[i])
    frame["h_mean"] = draws.h.mean(axis=0)
    return frame
