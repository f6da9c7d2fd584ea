from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from dotenv import load_dotenv

from data import (
    IncomeSchema,
    aggregate_monthly_to_quarterly,
    assemble_dataset,
    load_grouped_csv,
    load_macro_csv,
    load_transform_spec,
    shock_variable,
)
from data.assemble import INSTRUMENTS
from experiments import generate_synthetic_dataset
from models import Dataset, IrfSpec, Priors, SamplerConfig, SyntheticTruth
from sampler.gibbs import FIRST_STAGE
from utils.errors import ConfigError, ValidationError
from utils.hashing import sha256_payload

logger = logging.getLogger(__name__)

PATH_FIELDS = ("income_csv", "income_schema", "macro_csv", "transforms", "synthetic_truth", "output_dir")


@dataclass
class RunConfig:
    """
    One JSON document describing a run. Relative paths resolve against the
    document's directory; CLI flags override fields; machine-local settings
    (cache directory) come from the environment.
    """

    seed: int
    output_dir: Path
    income_csv: Optional[Path] = None
    income_schema: Optional[Path] = None
    macro_csv: Optional[Path] = None
    transforms: Optional[Path] = None
    synthetic_truth: Optional[Path] = None
    variables: Optional[List[str]] = None
    instrument: str = "ssr"
    first_stage: str = "gls"
    priors: Dict[str, Any] = field(default_factory=dict)
    sampler: Dict[str, Any] = field(default_factory=dict)
    irf: Dict[str, Any] = field(default_factory=dict)
    threads: int = 1
    n_target: int = 10_000
    cache_dir: Path = Path(".cache")

    @classmethod
    def load(cls, path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
        load_dotenv()
        payload: Dict[str, Any] = {}
        base = Path.cwd()
        if path is not None:
            path = Path(path)
            try:
                payload = json.loads(path.read_text())
            except FileNotFoundError as e:
                raise ConfigError(f"config file not found: {path}") from e
            except json.JSONDecodeError as e:
                raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
            if not isinstance(payload, dict):
                raise ConfigError(f"config file {path} must hold a JSON object")
            base = path.resolve().parent

        payload.update({key: value for key, value in (overrides or {}).items() if value is not None})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        if payload.get("seed") is None:
            raise ConfigError("a seed is required (config field 'seed' or --seed)")
        if payload.get("output_dir") is None:
            raise ConfigError("an output directory is required (config field 'output_dir' or --out)")

        for name in PATH_FIELDS:
            if payload.get(name) is not None:
                payload[name] = cls._resolve(base, payload[name])
        payload["cache_dir"] = Path(payload.get("cache_dir") or cls._load_env_var("INEQVAR_CACHE_DIR", ".cache"))
        try:
            config = cls(**payload)
        except TypeError as e:
            raise ConfigError(f"invalid config: {e}") from e
        config.validate()
        return config

    @staticmethod
    def _resolve(base: Path, value: Any) -> Path:
        path = Path(value)
        return path if path.is_absolute() else base / path

    @staticmethod
    def _load_env_var(var_name: str, default: str) -> str:
        return os.getenv(var_name, default)

    def validate(self) -> None:
        try:
            self.seed = int(self.seed)
            self.threads = int(self.threads)
            self.n_target = int(self.n_target)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"seed, threads and n_target must be integers: {e}") from e
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.instrument not in INSTRUMENTS:
            raise ConfigError(f"unknown instrument '{self.instrument}', expected one of {list(INSTRUMENTS)}")
        if self.first_stage not in FIRST_STAGE:
            raise ConfigError(f"unknown first stage '{self.first_stage}', expected one of {FIRST_STAGE}")
        try:
            self.priors_obj()
            self.sampler_config()
            self.irf_spec()
        except ValidationError as e:
            raise ConfigError(str(e)) from e

    def require_data(self) -> None:
        """Check every referenced input exists before anything is written."""
        if self.synthetic_truth is not None:
            required = {"synthetic_truth": self.synthetic_truth}
        else:
            required = {
                "income_csv": self.income_csv,
                "income_schema": self.income_schema,
                "macro_csv": self.macro_csv,
            }
            if self.transforms is not None:
                required["transforms"] = self.transforms
        missing = [name for name, value in required.items() if value is None]
        if missing:
            raise ConfigError(f"config lacks {missing}")
        absent = {name: str(value) for name, value in required.items() if not Path(value).exists()}
        if absent:
            raise ConfigError(f"referenced files do not exist: {absent}")

    def priors_obj(self) -> Priors:
        return Priors.from_overrides(self.priors)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig.from_dict(self.sampler)

    @property
    def shock_variable(self) -> str:
        return self.irf.get("shock_variable") or shock_variable(self.instrument)

    def irf_spec(self) -> IrfSpec:
        return IrfSpec.from_dict(self.shock_variable, self.irf)

    def load_dataset(self) -> Dataset:
        self.require_data()
        if self.synthetic_truth is not None:
            truth = SyntheticTruth.load(self.synthetic_truth)
            logger.info(f"Generating dataset from synthetic truth {self.synthetic_truth}")
            return generate_synthetic_dataset(truth).dataset

        schema = IncomeSchema.load(self.income_schema)
        income = load_grouped_csv(self.income_csv, schema)
        if income.dates.freqstr.startswith("M"):
            income = aggregate_monthly_to_quarterly(income, self.n_target)
        macro = load_macro_csv(self.macro_csv)
        transforms = load_transform_spec(self.transforms) if self.transforms else None
        return assemble_dataset(income, macro, transforms, self.instrument, order=self.variables)

    def to_dict(self) -> Dict[str, Any]:
        payload = {}
        for f in fields(self):
            value = getattr(self, f.name)
            payload[f.name] = str(value) if isinstance(value, Path) else value
        # Machine-local, excluded from the provenance hash.
        payload.pop("cache_dir")
        return payload

    def config_hash(self) -> str:
        return sha256_payload(self.to_dict())
