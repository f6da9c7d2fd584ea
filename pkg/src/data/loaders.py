from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from models import GroupedIncomeSeries, MacroPanel
from models.income import to_period_index
from utils.errors import DataIOError, ValidationError
from utils.hashing import write_json

logger = logging.getLogger(__name__)

TRANSFORMS = ("log100", "level")


@dataclass
class IncomeSchema:
    """
    Column map of a grouped-income CSV (`date,b1,...,bk,total`).

    Endpoints are either fixed survey brackets (`endpoints`) or, for simulated
    order statistics, read per row from `endpoint_columns`.
    """

    endpoints: Optional[List[float]] = None
    cumulative: bool = True
    date_column: str = "date"
    total_column: str = "total"
    bracket_columns: Optional[List[str]] = None
    endpoint_columns: Optional[List[str]] = None

    def __post_init__(self):
        if (self.endpoints is None) == (self.endpoint_columns is None):
            raise ValidationError("schema must give exactly one of 'endpoints' or 'endpoint_columns'")

    @property
    def k(self) -> int:
        return len(self.endpoints if self.endpoints is not None else self.endpoint_columns)

    @property
    def count_columns(self) -> List[str]:
        if self.bracket_columns is not None:
            return list(self.bracket_columns)
        return [f"b{i + 1}" for i in range(self.k)]

    @classmethod
    def load(cls, path: Path) -> IncomeSchema:
        try:
            payload = json.loads(Path(path).read_text())
        except FileNotFoundError as e:
            raise DataIOError(f"schema file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ValidationError(f"schema file {path} is not valid JSON: {e}") from e
        try:
            return cls(**payload)
        except TypeError as e:
            raise ValidationError(f"invalid schema {path}: {e}") from e

    def save(self, path: Path) -> None:
        payload = {
            "endpoints": self.endpoints,
            "cumulative": self.cumulative,
            "date_column": self.date_column,
            "total_column": self.total_column,
            "bracket_columns": self.bracket_columns,
            "endpoint_columns": self.endpoint_columns,
        }
        write_json(path, {k: v for k, v in payload.items() if v is not None})


def _read_csv(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype={"date": str})
    except FileNotFoundError as e:
        raise DataIOError(f"file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ValidationError(f"could not parse {path}: {e}") from e


def _require_columns(frame: pd.DataFrame, columns: List[str], path: Path) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValidationError(f"{path} is missing columns {missing}")


def _parse_dates(labels, path: Path) -> pd.PeriodIndex:
    try:
        return to_period_index(list(labels))
    except (ValueError, TypeError) as e:
        raise ValidationError(f"{path}: unparseable period label ({e})") from e


def load_grouped_csv(path: Path, schema: IncomeSchema) -> GroupedIncomeSeries:
    """Read grouped income counts; per-bracket frequencies are turned into cumulative counts."""
    path = Path(path)
    frame = _read_csv(path)
    columns = [schema.date_column, *schema.count_columns, schema.total_column]
    if schema.endpoint_columns:
        columns += list(schema.endpoint_columns)
    _require_columns(frame, columns, path)
    if frame.empty:
        raise ValidationError(f"{path} has no rows")

    counts = frame[schema.count_columns].to_numpy(dtype=float)
    totals = frame[schema.total_column].to_numpy(dtype=float)
    for name, values in (("counts", counts), ("totals", totals)):
        if np.any(~np.isfinite(values)) or np.any(values < 0) or np.any(values != np.round(values)):
            raise ValidationError(f"{path}: {name} must be nonnegative integers")
    counts = counts.astype(np.int64)
    if not schema.cumulative:
        counts = np.cumsum(counts, axis=1)

    if schema.endpoint_columns:
        endpoints = frame[schema.endpoint_columns].to_numpy(dtype=float)
    else:
        endpoints = np.asarray(schema.endpoints, dtype=float)

    series = GroupedIncomeSeries(
        dates=_parse_dates(frame[schema.date_column], path),
        endpoints=endpoints,
        cum_counts=counts,
        total=totals.astype(np.int64),
    )
    logger.info(f"Loaded {series} from {path}")
    return series


def write_grouped_csv(series: GroupedIncomeSeries, path: Path, schema_path: Optional[Path] = None) -> IncomeSchema:
    """Write cumulative counts; per-period endpoints go to x1..xk columns."""
    k = series.k
    frame = pd.DataFrame(series.cum_counts, columns=[f"b{i + 1}" for i in range(k)])
    frame.insert(0, "date", series.dates.astype(str))
    frame["total"] = series.total
    if series.endpoints.ndim == 2:
        endpoint_columns = [f"x{i + 1}" for i in range(k)]
        for i, name in enumerate(endpoint_columns):
            frame[name] = series.endpoints[:, i]
        schema = IncomeSchema(endpoint_columns=endpoint_columns)
    else:
        schema = IncomeSchema(endpoints=series.endpoints.tolist())
    frame.to_csv(path, index=False, float_format="%.10g")
    if schema_path is not None:
        schema.save(schema_path)
    return schema


def load_macro_csv(path: Path) -> pd.DataFrame:
    """`date,<name1>,...` with one row per quarter → DataFrame on a quarterly PeriodIndex."""
    path = Path(path)
    frame = _read_csv(path)
    _require_columns(frame, ["date"], path)
    dates = _parse_dates(frame.pop("date"), path)
    frame.index = dates
    frame = frame.apply(pd.to_numeric, errors="coerce")
    logger.info(f"Loaded {frame.shape[1]} macro series x {frame.shape[0]} periods from {path}")
    return frame


def write_macro_csv(panel: MacroPanel, path: Path) -> None:
    frame = panel.to_frame()
    frame.index = frame.index.astype(str)
    frame.index.name = "date"
    frame.to_csv(path, float_format="%.10g")


def load_transform_spec(path: Path) -> Dict[str, str]:
    try:
        payload = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise DataIOError(f"transform spec not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"transform spec {path} is not valid JSON: {e}") from e
    return validate_transform_spec(payload)


def validate_transform_spec(payload) -> Dict[str, str]:
    if not isinstance(payload, dict):
        raise ValidationError("transform spec must be a JSON object {name: transform}")
    bad = {name: kind for name, kind in payload.items() if kind not in TRANSFORMS}
    if bad:
        raise ValidationError(f"unknown transforms {bad}; expected one of {TRANSFORMS}")
    return {str(name): str(kind) for name, kind in payload.items()}
