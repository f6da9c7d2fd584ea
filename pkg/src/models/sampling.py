from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from utils.errors import ValidationError


def pack_coefficients(alpha: np.ndarray, b_mat: np.ndarray) -> np.ndarray:
    """β = vec((α, B)′): row i of (α, B) becomes the i-th block of m + 1 entries."""
    return np.column_stack([np.asarray(alpha, dtype=float), np.asarray(b_mat, dtype=float)]).ravel()


def unpack_coefficients(beta: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    coef = np.asarray(beta, dtype=float).reshape(m, m + 1)
    return coef[:, 0].copy(), coef[:, 1:].copy()


def spectral_radius(b_mat: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(b_mat))))


@dataclass
class Priors:
    """
    Prior hyperparameters. Defaults are the diffuse choices mu0 = 0,
    tau0_sq = 100, beta0 = 0, omega0 = 100·I, nu0 = m + 1, sigma0 = 0.01·I;
    matrix-valued entries left as None are filled in by `resolve(m)`.
    """

    mu0: float = 0.0
    tau0_sq: float = 100.0
    beta0: Optional[np.ndarray] = None
    omega0: Optional[np.ndarray] = None
    nu0: Optional[float] = None
    sigma0: Optional[np.ndarray] = None

    @classmethod
    def from_overrides(cls, overrides: Optional[Mapping[str, Any]] = None) -> Priors:
        """
        Build priors from a JSON-style mapping. Scalars `omega0_scale` and
        `sigma0_scale` scale the identity, `beta0` may be a scalar or a vector.
        """
        overrides = dict(overrides or {})
        known = {f.name for f in fields(cls)} | {"omega0_scale", "sigma0_scale"}
        unknown = set(overrides) - known
        if unknown:
            raise ValidationError(f"Unknown prior settings: {sorted(unknown)}")
        priors = cls(
            mu0=float(overrides.get("mu0", 0.0)),
            tau0_sq=float(overrides.get("tau0_sq", 100.0)),
            nu0=None if overrides.get("nu0") is None else float(overrides["nu0"]),
        )
        if "beta0" in overrides:
            priors.beta0 = np.asarray(overrides["beta0"], dtype=float)
        if "omega0_scale" in overrides:
            priors.omega0 = float(overrides["omega0_scale"])
        if "sigma0_scale" in overrides:
            priors.sigma0 = float(overrides["sigma0_scale"])
        return priors

    def resolve(self, m: int) -> Priors:
        n_coef = m * (m + 1)
        beta0 = np.zeros(n_coef) if self.beta0 is None else np.broadcast_to(
            np.asarray(self.beta0, dtype=float), (n_coef,)
        ).copy()
        omega0 = _identity_scaled(self.omega0, 100.0, n_coef)
        sigma0 = _identity_scaled(self.sigma0, 0.01, m)
        nu0 = float(m + 1) if self.nu0 is None else float(self.nu0)
        resolved = replace(
            self, beta0=beta0, omega0=omega0, nu0=nu0, sigma0=sigma0
        )
        resolved.validate(m)
        return resolved

    def validate(self, m: int) -> None:
        if self.tau0_sq <= 0:
            raise ValidationError("tau0_sq must be positive")
        if self.nu0 is None or self.nu0 <= m - 1:
            raise ValidationError(f"nu0 must exceed m - 1 = {m - 1}")
        for name, matrix in (("omega0", self.omega0), ("sigma0", self.sigma0)):
            try:
                np.linalg.cholesky(matrix)
            except np.linalg.LinAlgError as e:
                raise ValidationError(f"{name} must be symmetric positive definite") from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu0": self.mu0,
            "tau0_sq": self.tau0_sq,
            "beta0": None if self.beta0 is None else np.asarray(self.beta0).tolist(),
            "omega0": None if self.omega0 is None else np.asarray(self.omega0).tolist(),
            "nu0": self.nu0,
            "sigma0": None if self.sigma0 is None else np.asarray(self.sigma0).tolist(),
        }


def _identity_scaled(value, default_scale: float, size: int) -> np.ndarray:
    if value is None:
        return default_scale * np.eye(size)
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return float(value) * np.eye(size)
    if value.shape != (size, size):
        raise ValidationError(f"expected a {size}x{size} matrix, got {value.shape}")
    return value.copy()


@dataclass
class SamplerConfig:
    burn_in: int = 10_000
    draws: int = 10_000
    thin: int = 1
    max_stationarity_tries: int = 1_000
    target_acceptance: float = 0.35
    adaptation_exponent: float = 0.6
    initial_scale: float = 0.1
    log_every: int = 1_000

    def __post_init__(self):
        if self.burn_in < 1:
            raise ValidationError("burn_in must be at least 1")
        if self.draws < 1 or self.thin < 1:
            raise ValidationError("draws and thin must be at least 1")
        if self.max_stationarity_tries < 1:
            raise ValidationError("max_stationarity_tries must be at least 1")
        if not 0.0 < self.target_acceptance < 1.0:
            raise ValidationError("target_acceptance must lie in (0, 1)")
        if not 0.5 < self.adaptation_exponent <= 1.0:
            raise ValidationError("adaptation_exponent must lie in (0.5, 1]")
        if self.initial_scale <= 0:
            raise ValidationError("initial_scale must be positive")
        if self.log_every < 1:
            raise ValidationError("log_every must be at least 1")

    @property
    def iterations(self) -> int:
        return self.burn_in + self.draws * self.thin

    @classmethod
    def from_dict(cls, payload: Optional[Mapping[str, Any]] = None) -> SamplerConfig:
        payload = dict(payload or {})
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"Unknown sampler settings: {sorted(unknown)}")
        return cls(**payload)

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class ChainState:
    """Current point of the Markov chain. Mutated in place by the Gibbs sweep."""

    mu: np.ndarray
    h: np.ndarray
    beta: np.ndarray
    sigma_mat: np.ndarray
    mh_scales: np.ndarray
    rng_seed: int

    @property
    def m(self) -> int:
        return int(self.sigma_mat.shape[0])


@dataclass(frozen=True, eq=False)
class PosteriorDraws:
    """Retained draws. Arrays are read-only once constructed."""

    mu: np.ndarray
    h: np.ndarray
    beta: np.ndarray
    sigma: np.ndarray
    variables: List[str]
    dates: List[str]
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        arrays = {}
        for name in ("mu", "h", "beta", "sigma"):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            arrays[name] = array
        d, periods = arrays["mu"].shape
        m = len(self.variables)
        expected = {
            "h": (d, periods),
            "beta": (d, m * (m + 1)),
            "sigma": (d, m, m),
        }
        for name, shape in expected.items():
            if arrays[name].shape != shape:
                raise ValidationError(f"{name} draws have shape {arrays[name].shape}, expected {shape}")
        if len(self.dates) != periods:
            raise ValidationError(f"{len(self.dates)} dates for {periods} periods")
        for name, array in arrays.items():
            object.__setattr__(self, name, array)
        object.__setattr__(self, "variables", list(self.variables))
        object.__setattr__(self, "dates", [str(d) for d in self.dates])

    @property
    def count(self) -> int:
        return int(self.mu.shape[0])

    @property
    def m(self) -> int:
        return len(self.variables)

    @property
    def periods(self) -> int:
        return int(self.mu.shape[1])

    def b_matrices(self) -> np.ndarray:
        return self.beta.reshape(self.count, self.m, self.m + 1)[:, :, 1:]

    def sigma_paths(self) -> np.ndarray:
        """Posterior draws of the lognormal scale σ_t = exp(h_t / 2)."""
        return np.exp(self.h / 2.0)
