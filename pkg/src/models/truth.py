from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from models.grid import QuantileGrid
from models.sampling import spectral_radius
from utils.errors import DataIOError, ValidationError
from utils.hashing import write_json


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    """
    Generating parameters of the joint model. `h_t` is the first VAR state;
    `mu_path` (or the constant `mu_bar`) gives the log-scale location μ_t.
    """

    alpha: np.ndarray
    b_mat: np.ndarray
    sigma_mat: np.ndarray
    grid: QuantileGrid
    n: int = 10_000
    periods: int = 60
    seed: int = 0
    mu_bar: float = 0.0
    mu_path: Optional[np.ndarray] = None
    names: Optional[List[str]] = None
    start: str = "2002Q1"
    noise_free: bool = False

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).ravel()
        b_mat = np.array(self.b_mat, dtype=float)
        sigma_mat = np.array(self.sigma_mat, dtype=float)
        m = alpha.size
        if b_mat.shape != (m, m) or sigma_mat.shape != (m, m):
            raise ValidationError(f"alpha, b_mat and sigma_mat must agree on m = {m}")
        radius = spectral_radius(b_mat)
        if radius >= 1.0:
            raise ValidationError(f"b_mat is not stable (spectral radius {radius:.4f})")
        try:
            np.linalg.cholesky(sigma_mat)
        except np.linalg.LinAlgError as e:
            raise ValidationError("sigma_mat must be symmetric positive definite") from e
        if self.periods < 1 or self.n < 2:
            raise ValidationError("periods must be >= 1 and n >= 2")
        if not isinstance(self.grid, QuantileGrid):
            object.__setattr__(self, "grid", QuantileGrid(self.grid))
        ranks = np.ceil(self.n * self.grid.probs)
        if np.any(np.diff(ranks) <= 0) or ranks[-1] >= self.n:
            raise ValidationError("grid too fine for the survey size: order-statistic ranks collide")
        names = list(self.names) if self.names else [f"y{j + 2}" for j in range(m - 1)]
        if len(names) != m - 1:
            raise ValidationError(f"{len(names)} macro names for m = {m}")
        if self.mu_path is not None:
            mu_path = np.array(self.mu_path, dtype=float).ravel()
            if mu_path.size != self.periods:
                raise ValidationError(f"mu_path has {mu_path.size} entries for {self.periods} periods")
            object.__setattr__(self, "mu_path", mu_path)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "b_mat", b_mat)
        object.__setattr__(self, "sigma_mat", sigma_mat)
        object.__setattr__(self, "names", names)

    @property
    def m(self) -> int:
        return int(self.alpha.size)

    @property
    def ranks(self) -> np.ndarray:
        """1-based ranks ⌈n·p_i⌉ of the recorded order statistics."""
        return np.ceil(self.n * self.grid.probs).astype(np.int64)

    @property
    def mu(self) -> np.ndarray:
        if self.mu_path is not None:
            return self.mu_path
        return np.full(self.periods, self.mu_bar)

    @classmethod
    def load(cls, path: Path) -> SyntheticTruth:
        try:
            payload = json.loads(Path(path).read_text())
        except FileNotFoundError as e:
            raise DataIOError(f"synthetic truth file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ValidationError(f"synthetic truth file {path} is not valid JSON: {e}") from e
        return cls.from_dict(payload)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> SyntheticTruth:
        payload = dict(payload)
        try:
            grid = QuantileGrid(payload.pop("probs"))
            return cls(
                alpha=payload.pop("alpha"),
                b_mat=payload.pop("b_mat"),
                sigma_mat=payload.pop("sigma_mat"),
                grid=grid,
                **payload,
            )
        except (KeyError, TypeError) as e:
            raise ValidationError(f"invalid synthetic truth document: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha.tolist(),
            "b_mat": self.b_mat.tolist(),
            "sigma_mat": self.sigma_mat.tolist(),
            "probs": self.grid.probs.tolist(),
            "n": self.n,
            "periods": self.periods,
            "seed": self.seed,
            "mu_bar": self.mu_bar,
            "mu_path": None if self.mu_path is None else self.mu_path.tolist(),
            "names": self.names,
            "start": self.start,
            "noise_free": self.noise_free,
        }

    def save(self, path: Path) -> None:
        write_json(path, self.to_dict())
