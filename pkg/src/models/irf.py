from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from utils.errors import ValidationError


@dataclass(frozen=True)
class IrfSpec:
    """Shock definition: +`scale` units of `shock_variable` at impact, traced for `horizon` quarters."""

    shock_variable: str
    horizon: int = 28
    scale: float = 1.0
    quantiles: Tuple[float, ...] = (0.16, 0.5, 0.84)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError("IRF horizon must be at least 1")
        if not np.isfinite(self.scale) or self.scale == 0:
            raise ValidationError("IRF scale must be finite and nonzero")
        quantiles = tuple(float(q) for q in self.quantiles)
        if not quantiles:
            raise ValidationError("at least one quantile is required")
        if any(not 0.0 < q < 1.0 for q in quantiles) or any(
            b <= a for a, b in zip(quantiles, quantiles[1:])
        ):
            raise ValidationError(f"quantiles must be strictly increasing within (0, 1): {quantiles}")
        object.__setattr__(self, "quantiles", quantiles)

    @classmethod
    def from_dict(cls, shock_variable: str, payload: Optional[Mapping[str, Any]] = None) -> IrfSpec:
        payload = dict(payload or {})
        return cls(
            shock_variable=payload.pop("shock_variable", shock_variable),
            horizon=int(payload.pop("horizon", 28)),
            scale=float(payload.pop("scale", 1.0)),
            quantiles=tuple(payload.pop("quantiles", (0.16, 0.5, 0.84))),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "shock_variable": self.shock_variable,
            "horizon": self.horizon,
            "scale": self.scale,
            "quantiles": list(self.quantiles),
        }


@dataclass(frozen=True, eq=False)
class IrfBands:
    """Pointwise posterior quantiles of structural responses, variable x horizon x quantile."""

    responses: np.ndarray
    variables: List[str]
    spec: IrfSpec
    shutdown: Tuple[str, ...] = ()
    draws_used: int = 0
    skipped: int = 0
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        responses = np.array(self.responses, dtype=float)
        expected = (len(self.variables), self.spec.horizon + 1, len(self.spec.quantiles))
        if responses.shape != expected:
            raise ValidationError(f"responses have shape {responses.shape}, expected {expected}")
        responses.setflags(write=False)
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "shutdown", tuple(self.shutdown))

    def index(self, variable: str) -> int:
        try:
            return self.variables.index(variable)
        except ValueError:
            raise ValidationError(f"'{variable}' is not one of {self.variables}") from None

    def quantile(self, variable: str, q: float) -> np.ndarray:
        try:
            level = self.spec.quantiles.index(q)
        except ValueError:
            raise ValidationError(f"quantile {q} not in {self.spec.quantiles}") from None
        return self.responses[self.index(variable), :, level]

    def median(self, variable: str) -> np.ndarray:
        return self.quantile(variable, 0.5)

    def lower(self, variable: str) -> np.ndarray:
        return self.responses[self.index(variable), :, 0]

    def upper(self, variable: str) -> np.ndarray:
        return self.responses[self.index(variable), :, -1]

    def to_frame(self) -> pd.DataFrame:
        """Tidy layout: variable, horizon, quantile, value, shutdown."""
        n_var, n_h, n_q = self.responses.shape
        variable, horizon, quantile = np.meshgrid(
            np.arange(n_var), np.arange(n_h), np.arange(n_q), indexing="ij"
        )
        return pd.DataFrame(
            {
                "variable": np.asarray(self.variables)[variable.ravel()],
                "horizon": horizon.ravel(),
                "quantile": np.asarray(self.spec.quantiles)[quantile.ravel()],
                "value": self.responses.ravel(),
                "shutdown": shutdown_label(self.shutdown),
            }
        )


def shutdown_label(names: Sequence[str]) -> str:
    return ";".join(names) if names else "none"
