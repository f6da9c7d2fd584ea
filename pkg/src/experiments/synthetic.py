from __future__ import annotations

import logging
from pathlib import Path
from typing import List, NamedTuple

import numpy as np
import pandas as pd

from data.loaders import write_grouped_csv, write_macro_csv
from models import Dataset, GroupedIncomeSeries, MacroPanel, SyntheticTruth
from utils.hashing import write_json

logger = logging.getLogger(__name__)


class SyntheticSample(NamedTuple):
    dataset: Dataset
    mu: np.ndarray
    h: np.ndarray
    y: np.ndarray


def simulate_var_path(truth: SyntheticTruth, rng: np.random.Generator) -> np.ndarray:
    """y_t = α + B y_{t−1} + η_t from y_0 = 0, T x m."""
    chol = np.linalg.cholesky(truth.sigma_mat)
    shocks = rng.standard_normal((truth.periods, truth.m)) @ chol.T
    y = np.empty((truth.periods, truth.m))
    prev = np.zeros(truth.m)
    for t in range(truth.periods):
        prev = truth.alpha + truth.b_mat @ prev + shocks[t]
        y[t] = prev
    return y


def sample_log_order_statistics(
    mu: float, sigma: float, ranks: np.ndarray, n: int, rng: np.random.Generator, size: int = 1
) -> np.ndarray:
    """
    ln of the order statistics at 1-based `ranks` in `size` independent samples
    of n draws from LN(μ, σ²), size x k.
    """
    kth = np.asarray(ranks, dtype=np.int64) - 1
    out = np.empty((size, kth.size))
    for r in range(size):
        z = rng.standard_normal(n)
        out[r] = np.partition(z, kth)[kth]
    return mu + sigma * out


def generate_synthetic_dataset(truth: SyntheticTruth) -> SyntheticSample:
    """
    Forward-simulate the joint model: VAR path, h_t = y_{1,t}, then per period
    n incomes from LN(μ_t, exp(h_t)) reduced to the order statistics at ranks
    ⌈n·p_i⌉. Cumulative counts are the ranks themselves. With `noise_free`
    the endpoints sit exactly on exp(μ_t + σ_t u_i).
    """
    rng = np.random.default_rng(truth.seed)
    y = simulate_var_path(truth, rng)
    h = y[:, 0].copy()
    sigma = np.exp(h / 2.0)
    mu = np.array(truth.mu, dtype=float)
    ranks = truth.ranks

    log_x = np.empty((truth.periods, ranks.size))
    for t in range(truth.periods):
        if truth.noise_free:
            log_x[t] = mu[t] + sigma[t] * truth.grid.quantiles
        else:
            log_x[t] = sample_log_order_statistics(mu[t], sigma[t], ranks, truth.n, rng)[0]

    dates = pd.period_range(start=truth.start, periods=truth.periods, freq="Q")
    income = GroupedIncomeSeries(
        dates=dates,
        endpoints=np.exp(log_x),
        cum_counts=np.tile(ranks, (truth.periods, 1)),
        total=truth.n,
    )
    macro = MacroPanel(dates=dates, names=truth.names, values=y[:, 1:])
    dataset = Dataset(income=income, macro=macro)
    logger.info(
        f"Simulated {dataset} (seed {truth.seed}, noise_free={truth.noise_free}, "
        f"σ_t in [{sigma.min():.3f}, {sigma.max():.3f}])"
    )
    return SyntheticSample(dataset=dataset, mu=mu, h=h, y=y)


def write_synthetic_bundle(sample: SyntheticSample, truth: SyntheticTruth, out_dir: Path) -> List[Path]:
    """
    Files `fit-joint` can ingest unchanged (income.csv, schema.json, macro.csv,
    transforms.json) plus the latent paths and the truth document.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "income": out_dir / "income.csv",
        "schema": out_dir / "schema.json",
        "macro": out_dir / "macro.csv",
        "transforms": out_dir / "transforms.json",
        "latent": out_dir / "latent.csv",
        "truth": out_dir / "truth.json",
    }
    write_grouped_csv(sample.dataset.income, paths["income"], schema_path=paths["schema"])
    write_macro_csv(sample.dataset.macro, paths["macro"])
    # Simulated macro states can be negative, so every series stays in levels.
    write_json(paths["transforms"], {name: "level" for name in sample.dataset.macro.names})
    latent = pd.DataFrame(
        {
            "date": sample.dataset.dates.astype(str),
            "mu": sample.mu,
            "h": sample.h,
            "sigma": np.exp(sample.h / 2.0),
        }
    )
    latent.to_csv(paths["latent"], index=False, float_format="%.10g")
    truth.save(paths["truth"])
    logger.info(f"Wrote synthetic bundle to {out_dir}")
    return list(paths.values())
