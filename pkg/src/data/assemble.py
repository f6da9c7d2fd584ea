from __future__ import annotations

import logging
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from data.loaders import TRANSFORMS
from models import Dataset, GroupedIncomeSeries, MacroPanel
from models.income import ContiguityError, to_period_index
from utils.errors import ValidationError

logger = logging.getLogger(__name__)

# instrument -> (series in the policy slot, series in the long-rate slot, shocked series)
INSTRUMENTS: Dict[str, tuple[str, str, str]] = {
    "ssr": ("ssr", "ltir", "ssr"),
    "2ygby": ("2ygby", "ltir", "2ygby"),
    "spread": ("stir", "spread", "spread"),
}

DEFAULT_TRANSFORMS: Dict[str, str] = {"rgdp": "log100", "reer": "log100", "eq": "log100"}


class UnknownVariableError(ValidationError):
    """Variable name not present in the panel or the identification order."""


def identification_order(instrument: str = "ssr") -> List[str]:
    """
    Macro variables after the inequality state, slow-moving first:
    rgdp, p, unempl, <policy>, <long rate>, reer, eq. The term-spread
    configuration puts the call rate in the policy slot and the spread in the
    long-rate slot.
    """
    if instrument not in INSTRUMENTS:
        raise ValidationError(f"unknown policy instrument '{instrument}', expected one of {list(INSTRUMENTS)}")
    policy, long_rate, _ = INSTRUMENTS[instrument]
    return ["rgdp", "p", "unempl", policy, long_rate, "reer", "eq"]


def shock_variable(instrument: str = "ssr") -> str:
    if instrument not in INSTRUMENTS:
        raise ValidationError(f"unknown policy instrument '{instrument}'")
    return INSTRUMENTS[instrument][2]


def apply_transform(values: pd.Series, kind: str) -> pd.Series:
    if kind == "level":
        return values.astype(float)
    if kind == "log100":
        positive = values.where(values > 0)
        return 100.0 * np.log(positive.astype(float))
    raise ValidationError(f"unknown transform '{kind}', expected one of {TRANSFORMS}")


def assemble_dataset(
    income: GroupedIncomeSeries,
    raw_macro: pd.DataFrame,
    transform_spec: Optional[Mapping[str, str]] = None,
    instrument: str = "ssr",
    order: Optional[Sequence[str]] = None,
) -> Dataset:
    """
    Put the macro panel in identification order, apply per-variable transforms
    (log×100 for rgdp, reer and eq by default; everything else in levels) and
    align it with the income index.
    """
    raw = raw_macro.copy()
    if not isinstance(raw.index, pd.PeriodIndex):
        raw.index = to_period_index(list(raw.index), freq="Q")
    if instrument == "spread" and "spread" not in raw.columns and {"ltir", "stir"} <= set(raw.columns):
        raw["spread"] = raw["ltir"] - raw["stir"]

    names = list(order) if order is not None else identification_order(instrument)
    missing = [name for name in names if name not in raw.columns]
    if missing:
        raise UnknownVariableError(f"macro panel lacks {missing}; available: {sorted(raw.columns)}")

    transform_spec = dict(transform_spec or {})
    unknown = sorted(set(transform_spec) - set(raw.columns) - set(names))
    if unknown:
        raise UnknownVariableError(f"transform spec names unknown variables {unknown}")
    transforms = {name: transform_spec.get(name, DEFAULT_TRANSFORMS.get(name, "level")) for name in names}

    absent = income.dates.difference(raw.index)
    if len(absent):
        raise ContiguityError(f"macro panel has no rows for {[str(d) for d in absent]}")
    aligned = raw.loc[income.dates, names]

    columns = {}
    for name in names:
        transformed = apply_transform(aligned[name], transforms[name])
        bad = transformed.index[~np.isfinite(transformed.to_numpy(dtype=float))]
        if len(bad):
            raise ValidationError(
                f"{name} is missing or invalid after '{transforms[name]}' at {[str(d) for d in bad]}"
            )
        columns[name] = transformed.to_numpy(dtype=float)

    macro = MacroPanel(
        dates=income.dates,
        names=names,
        values=np.column_stack([columns[name] for name in names]),
    )
    dataset = Dataset(income=income, macro=macro)
    logger.info(f"Assembled {dataset} with transforms {transforms}")
    return dataset
