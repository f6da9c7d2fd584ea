from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
import pandas as pd

from models.grid import QuantileGrid
from utils.errors import ValidationError

logger = logging.getLogger(__name__)

INEQUALITY_STATE = "inequality"


class RowValidationError(ValidationError):
    """A single period of grouped income data violates the count invariants."""

    def __init__(self, period: str, message: str):
        super().__init__(f"{period}: {message}")
        self.period = period


class ContiguityError(ValidationError):
    """Period index has gaps or does not match its partner series."""


def to_period_index(labels: Sequence, freq: str | None = None) -> pd.PeriodIndex:
    """Parse `YYYYQn` / `YYYY-MM` labels (or periods) into a PeriodIndex."""
    if isinstance(labels, pd.PeriodIndex):
        return labels if freq is None else labels.asfreq(freq)
    labels = [str(label).strip() for label in labels]
    if freq is None:
        freq = "Q" if labels and "Q" in labels[0].upper() else "M"
    return pd.PeriodIndex([pd.Period(label, freq=freq) for label in labels], freq=freq)


def check_contiguous(dates: pd.PeriodIndex) -> None:
    ordinals = np.asarray(dates.asi8)
    if ordinals.size > 1:
        steps = np.diff(ordinals)
        if np.any(steps != 1):
            bad = int(np.flatnonzero(steps != 1)[0])
            raise ContiguityError(
                f"Period index is not contiguous between {dates[bad]} and {dates[bad + 1]}"
            )


@dataclass(frozen=True, eq=False)
class GroupedIncomeSeries:
    """
    Grouped household income: per period, cumulative household counts at each
    bracket upper endpoint. The open top bracket has no endpoint and only shows
    up through `total`.

    `endpoints` is either one vector shared by every period (survey brackets)
    or a T x k matrix (simulated order statistics).
    """

    dates: pd.PeriodIndex
    endpoints: np.ndarray
    cum_counts: np.ndarray
    total: np.ndarray

    def __post_init__(self):
        dates = to_period_index(self.dates)
        cum_counts = np.array(np.atleast_2d(self.cum_counts), dtype=np.int64)
        total = np.broadcast_to(
            np.asarray(self.total, dtype=np.int64), (cum_counts.shape[0],)
        ).copy()
        endpoints = np.array(self.endpoints, dtype=float)

        n_periods, k = cum_counts.shape
        if len(dates) != n_periods:
            raise ValidationError(
                f"{len(dates)} period labels for {n_periods} rows of counts"
            )
        if endpoints.shape not in ((k,), (n_periods, k)):
            raise ValidationError(
                f"endpoints must have shape ({k},) or ({n_periods}, {k}), got {endpoints.shape}"
            )

        endpoint_rows = np.broadcast_to(endpoints, (n_periods, k))
        for t, label in enumerate(dates.astype(str)):
            row = endpoint_rows[t]
            if np.any(~np.isfinite(row)) or np.any(row <= 0):
                raise RowValidationError(label, f"endpoints must be positive: {row}")
            if np.any(np.diff(row) <= 0):
                raise RowValidationError(label, f"endpoints must be strictly increasing: {row}")
            counts = cum_counts[t]
            if counts[0] < 1:
                raise RowValidationError(label, "first cumulative count must be at least 1")
            if np.any(np.diff(counts) <= 0):
                raise RowValidationError(
                    label, f"cumulative counts must be strictly increasing: {counts.tolist()}"
                )
            if counts[-1] >= total[t]:
                raise RowValidationError(
                    label,
                    f"last cumulative count {counts[-1]} must be below the total {total[t]} "
                    "(the open top bracket cannot be empty)",
                )
        check_contiguous(dates)

        for array in (endpoints, cum_counts, total):
            array.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "endpoints", endpoints)
        object.__setattr__(self, "cum_counts", cum_counts)
        object.__setattr__(self, "total", total)

    @property
    def periods(self) -> int:
        return int(self.cum_counts.shape[0])

    @property
    def k(self) -> int:
        return int(self.cum_counts.shape[1])

    @property
    def probs(self) -> np.ndarray:
        return self.cum_counts / self.total[:, None]

    @property
    def endpoint_matrix(self) -> np.ndarray:
        return np.broadcast_to(self.endpoints, (self.periods, self.k))

    @property
    def log_endpoints(self) -> np.ndarray:
        return np.log(self.endpoint_matrix)

    def grid(self, t: int) -> QuantileGrid:
        return QuantileGrid.from_counts(self.cum_counts[t], self.total[t])

    def __str__(self) -> str:
        return (
            f"GroupedIncomeSeries {self.dates[0]}..{self.dates[-1]} "
            f"(T={self.periods}, k={self.k}, n={int(self.total[0])})"
        )


@dataclass(frozen=True, eq=False)
class MacroPanel:
    """Transformed macro series, columns already in identification order."""

    dates: pd.PeriodIndex
    names: List[str]
    values: np.ndarray

    def __post_init__(self):
        dates = to_period_index(self.dates)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        names = [str(name) for name in self.names]
        if values.shape != (len(dates), len(names)):
            raise ValidationError(
                f"macro values have shape {values.shape}, expected ({len(dates)}, {len(names)})"
            )
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate macro variable names: {names}")
        missing = ~np.isfinite(values)
        if missing.any():
            t, j = np.argwhere(missing)[0]
            raise ValidationError(f"missing value for {names[j]} at {dates[t]}")
        check_contiguous(dates)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.dates, columns=self.names)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Joint-model inputs: grouped income plus the macro panel on one quarterly index."""

    income: GroupedIncomeSeries
    macro: MacroPanel
    grids: List[QuantileGrid] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.income.dates.equals(self.macro.dates):
            raise ContiguityError(
                f"income covers {self.income.dates[0]}..{self.income.dates[-1]} but macro covers "
                f"{self.macro.dates[0]}..{self.macro.dates[-1]}"
            )
        if INEQUALITY_STATE in self.macro.names:
            raise ValidationError(f"'{INEQUALITY_STATE}' is reserved for the first VAR state")
        grids = [self.income.grid(t) for t in range(self.income.periods)]
        object.__setattr__(self, "grids", grids)

    @property
    def periods(self) -> int:
        return self.income.periods

    @property
    def m(self) -> int:
        return 1 + len(self.macro.names)

    @property
    def variables(self) -> List[str]:
        return [INEQUALITY_STATE, *self.macro.names]

    @property
    def dates(self) -> pd.PeriodIndex:
        return self.income.dates

    def __str__(self) -> str:
        return f"Dataset(T={self.periods}, k={self.income.k}, variables={self.variables})"
