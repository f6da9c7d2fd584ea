from __future__ import annotations

import asyncio
import logging
import os
import platform
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy

from analysis import plot_bands_svg, posterior_irf_bands, variable_indices
from api import FRED_GRAPH_URL, SeriesFetcher
from cli.config import RunConfig
from experiments import (
    compare_joint_twostep,
    generate_synthetic_dataset,
    simulate_lorenz_comparison,
    write_synthetic_bundle,
)
from models import SyntheticTruth
from sampler import estimated_inequality_frame, read_draws, run_joint_mcmc, run_twostep, write_draws
from utils.errors import DataIOError
from utils.hashing import sha256_payload, write_json

logger = logging.getLogger(__name__)

LOCK_NAME = ".lock"


class OutputLockedError(DataIOError):
    """Another command holds the output directory."""


@contextmanager
def output_lock(out_dir: Path) -> Iterator[Path]:
    """Exclusive use of `out_dir` for one command, via an O_EXCL lock file."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"cannot create output directory {out_dir}: {e}") from e
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise OutputLockedError(f"{out_dir} is in use by another command (remove {lock} if stale)") from e
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out_dir
    finally:
        lock.unlink(missing_ok=True)


def package_versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


def write_manifest(
    out_dir: Path,
    command: str,
    seed: int,
    settings: Dict[str, Any],
    outputs: Sequence[Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Provenance record: command, settings and their hash, seed, versions, outputs."""
    path = Path(out_dir) / "manifest.json"
    write_json(
        path,
        {
            "command": command,
            "seed": seed,
            "config": settings,
            "config_hash": sha256_payload(settings),
            "versions": package_versions(),
            "outputs": sorted(Path(p).name for p in outputs),
            **(extra or {}),
        },
    )
    return path


def _fit(config: RunConfig, command: str, method: str, svg: bool = False) -> int:
    dataset = config.load_dataset()
    priors = config.priors_obj()
    sampler = config.sampler_config()
    with output_lock(config.output_dir) as out_dir:
        if method == "joint":
            draws = run_joint_mcmc(dataset, priors, sampler, config.seed)
        else:
            draws = run_twostep(dataset, priors, sampler, config.seed, first_stage=config.first_stage)
        outputs = write_draws(draws, out_dir)
        inequality_path = out_dir / "inequality.csv"
        estimated_inequality_frame(draws).to_csv(inequality_path, index=False, float_format="%.10g")
        outputs.append(inequality_path)
        if svg:
            bands = posterior_irf_bands(draws, config.irf_spec())
            outputs.append(plot_bands_svg(bands, out_dir / "irf.svg"))
        write_manifest(
            out_dir,
            command,
            config.seed,
            config.to_dict(),
            outputs,
            {"draws": draws.count, "variables": draws.variables},
        )
    logger.info(f"{command}: {draws.count} draws written to {config.output_dir}")
    return 0


def cmd_fit_joint(config: RunConfig, svg: bool = False) -> int:
    return _fit(config, "fit-joint", "joint", svg)


def cmd_fit_twostep(config: RunConfig, svg: bool = False) -> int:
    return _fit(config, "fit-twostep", "twostep", svg)


def cmd_irf(config: RunConfig, draws_dir: Path, shutdown: Sequence[str] = (), svg: bool = False) -> int:
    draws = read_draws(draws_dir)
    spec = config.irf_spec()
    shutdown = list(dict.fromkeys(shutdown))
    variable_indices([spec.shock_variable, *shutdown], draws.variables)
    with output_lock(config.output_dir) as out_dir:
        bands = posterior_irf_bands(draws, spec, shutdown)
        stem = "irf" if not shutdown else "irf_no_" + "_".join(shutdown)
        csv_path = out_dir / f"{stem}.csv"
        bands.to_frame().to_csv(csv_path, index=False, float_format="%.10g")
        outputs: List[Path] = [csv_path]
        if svg:
            outputs.append(plot_bands_svg(bands, out_dir / f"{stem}.svg"))
        write_manifest(
            out_dir,
            "irf",
            config.seed,
            {**config.to_dict(), "draws_dir": str(draws_dir)},
            outputs,
            {"shutdown": shutdown, "irf": spec.to_dict(), "bands": bands.meta},
        )
    logger.info(f"irf: bands written to {csv_path}")
    return 0


def cmd_compare(config: RunConfig, svg: bool = False) -> int:
    dataset = config.load_dataset()
    spec = config.irf_spec()
    with output_lock(config.output_dir) as out_dir:
        bundle = compare_joint_twostep(
            dataset,
            config.priors_obj(),
            config.sampler_config(),
            spec,
            seed=config.seed,
            first_stage=config.first_stage,
            threads=config.threads,
        )
        outputs = bundle.write(out_dir, svg=svg)
        write_manifest(out_dir, "compare", config.seed, config.to_dict(), outputs, {"summary": bundle.summary()})
    logger.info(f"compare: below-diagonal share {bundle.scatter.below_share:.3f}")
    return 0


def cmd_simulate_lorenz(
    out_dir: Path,
    seed: int = 0,
    mu: float = 0.0,
    sigma: float = 1.0,
    n_obs: int = 100_000,
    n_groups: int = 5,
) -> int:
    report = simulate_lorenz_comparison(mu, sigma, n_obs, n_groups, seed)
    with output_lock(out_dir) as locked:
        outputs = report.write(locked)
        settings = {"mu": mu, "sigma": sigma, "n_obs": n_obs, "n_groups": n_groups}
        write_manifest(locked, "simulate-lorenz", seed, settings, outputs, {"report": report.to_dict()})
    return 0


def cmd_gen_synthetic(truth_path: Path, out_dir: Path, seed: Optional[int] = None) -> int:
    truth = SyntheticTruth.load(truth_path)
    if seed is not None:
        truth = SyntheticTruth.from_dict({**truth.to_dict(), "seed": seed})
    sample = generate_synthetic_dataset(truth)
    with output_lock(out_dir) as locked:
        outputs = write_synthetic_bundle(sample, truth, locked)
        write_manifest(locked, "gen-synthetic", truth.seed, truth.to_dict(), outputs)
    return 0


def cmd_fetch(
    source_ids: Sequence[str],
    out_dir: Path,
    cache_dir: Path,
    start: Optional[str] = None,
    end: Optional[str] = None,
    base_url: str = FRED_GRAPH_URL,
    seed: int = 0,
) -> int:
    """Download (or serve from cache) each series and write `<id>.csv` under `out_dir`."""

    async def fetch_all():
        async with SeriesFetcher(cache_dir, base_url=base_url) as fetcher:
            return await fetcher.fetch_many(source_ids, start, end)

    series = asyncio.run(fetch_all())
    with output_lock(out_dir) as locked:
        outputs = []
        for source_id, values in series.items():
            path = locked / f"{source_id}.csv"
            frame = values.rename("value").to_frame()
            frame.index = frame.index.strftime("%Y-%m-%d")
            frame.index.name = "date"
            frame.to_csv(path, float_format="%.10g")
            outputs.append(path)
        settings = {"source_ids": list(source_ids), "start": start, "end": end, "base_url": base_url}
        write_manifest(locked, "fetch", seed, settings, outputs)
    logger.info(f"fetch: wrote {len(outputs)} series to {out_dir}")
    return 0
