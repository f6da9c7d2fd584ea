from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np
import pandas as pd

from models import GroupedIncomeSeries
from models.income import to_period_index
from utils.errors import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_SIZE = 10_000


class IncompleteQuarterError(ValidationError):
    """Monthly waves do not cover every month of a quarter."""

    def __init__(self, months: List[str]):
        super().__init__(f"incomplete quarters; these months would be dropped: {months}")
        self.months = months


class LeadingCoverageError(ValidationError):
    """Requested quarter precedes the first available observation."""


def aggregate_monthly_to_quarterly(
    monthly: GroupedIncomeSeries, n: int = DEFAULT_SAMPLE_SIZE
) -> GroupedIncomeSeries:
    """
    Combine three monthly waves into one quarterly wave of size `n`.

    Each month is normalised to relative frequencies and the three months are
    averaged with equal weight, so the monthly sample sizes do not enter the
    quarterly shares. The cumulative quotas n·p̄_i are then rounded. Rounding the
    cumulative quotas keeps them monotone, hits the total exactly, and moves
    each p_i by at most 0.5/n.
    """
    if not monthly.dates.freqstr.startswith("M"):
        raise ValidationError(f"expected monthly periods, got frequency {monthly.dates.freqstr}")
    if monthly.endpoints.ndim != 1:
        raise ValidationError("monthly aggregation needs fixed bracket endpoints")

    quarters = monthly.dates.asfreq("Q")
    months_per_quarter = pd.Series(1, index=quarters).groupby(level=0).sum()
    incomplete = months_per_quarter[months_per_quarter != 3].index
    if len(incomplete):
        dropped = [str(d) for d, q in zip(monthly.dates, quarters) if q in set(incomplete)]
        raise IncompleteQuarterError(dropped)

    mean_probs = pd.DataFrame(monthly.probs, index=quarters).groupby(level=0).mean()
    cum_counts = np.floor(mean_probs.to_numpy() * n + 0.5).astype(np.int64)
    quarterly = GroupedIncomeSeries(
        dates=mean_probs.index,
        endpoints=monthly.endpoints,
        cum_counts=cum_counts,
        total=np.full(len(mean_probs), n, dtype=np.int64),
    )
    logger.info(f"Aggregated {monthly.periods} monthly waves into {quarterly.periods} quarters")
    return quarterly


def expand_biannual(series: pd.Series, index: Optional[pd.PeriodIndex] = None) -> pd.Series:
    """
    Forward-fill sparse (twice a year) observations onto quarters: each quarter
    carries the most recent observation. Without `index` the output runs from
    the first observation's quarter to one quarter past the last.
    """
    if series.empty:
        raise ValidationError("expand_biannual needs at least one observation")
    observed = series.copy()
    if isinstance(observed.index, pd.DatetimeIndex):
        observed.index = observed.index.to_period("Q")
    elif isinstance(observed.index, pd.PeriodIndex):
        observed.index = observed.index.asfreq("Q")
    else:
        observed.index = to_period_index(list(observed.index), freq="Q")
    if not observed.index.is_monotonic_increasing:
        raise ValidationError("observation dates must be sorted")
    observed = observed[~observed.index.duplicated(keep="last")]

    if index is None:
        index = pd.period_range(observed.index[0], observed.index[-1] + 1, freq="Q")
    else:
        index = to_period_index(index, freq="Q")
    if index[0] < observed.index[0]:
        raise LeadingCoverageError(
            f"{index[0]} precedes the first observation at {observed.index[0]}"
        )
    expanded = observed.reindex(index, method="ffill")
    expanded.name = series.name
    return expanded
