"""
Full conditionals of the joint model. Each sampler takes the current
`ChainState`, the precomputed `JointModel` and a numpy Generator, and returns
the new value without touching the state; the Gibbs sweep writes it back.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, stats

from models import ChainState, Priors, spectral_radius, unpack_coefficients
from sampler.model import JointModel, MeasurementTerms
from utils.errors import NumericalError

logger = logging.getLogger(__name__)


def mu_conditional(
    t: int, h_t: float, model: JointModel, priors: Optional[Priors] = None
) -> tuple[float, float]:
    """Mean and variance of μ_t | h_t under the N(μ0, τ0²) prior."""
    priors = priors or model.priors
    scale = math.exp(-h_t)
    precision = scale * model.one_prec_one[t] + 1.0 / priors.tau0_sq
    tau_sq = 1.0 / precision
    centred = model.one_prec_logx[t] - math.exp(h_t / 2.0) * model.one_prec_u[t]
    mean = tau_sq * (scale * centred + priors.mu0 / priors.tau0_sq)
    return mean, tau_sq


def sample_mu(t: int, state: ChainState, model: JointModel, rng: np.random.Generator) -> float:
    mean, tau_sq = mu_conditional(t, float(state.h[t]), model)
    return mean + math.sqrt(tau_sq) * float(rng.standard_normal())


def sample_mu_all(state: ChainState, model: JointModel, rng: np.random.Generator) -> np.ndarray:
    """All μ_t at once; they are conditionally independent given h."""
    priors = model.priors
    h = state.h
    scale = np.exp(-h)
    tau_sq = 1.0 / (scale * model.one_prec_one + 1.0 / priors.tau0_sq)
    centred = model.one_prec_logx - np.exp(h / 2.0) * model.one_prec_u
    mean = tau_sq * (scale * centred + priors.mu0 / priors.tau0_sq)
    return mean + np.sqrt(tau_sq) * rng.standard_normal(model.periods)


@dataclass(frozen=True)
class HContext:
    """Sweep-level quantities for the h_t updates: Σ⁻¹, α, B and the measurement terms."""

    sigma_inv: np.ndarray
    alpha: np.ndarray
    b_mat: np.ndarray
    terms: MeasurementTerms

    @classmethod
    def build(cls, state: ChainState, model: JointModel) -> HContext:
        try:
            factor = linalg.cho_factor(state.sigma_mat, lower=True)
        except linalg.LinAlgError as e:
            raise NumericalError(f"Σ is not positive definite: {e}") from e
        alpha, b_mat = unpack_coefficients(state.beta, model.m)
        return cls(
            sigma_inv=linalg.cho_solve(factor, np.eye(model.m)),
            alpha=alpha,
            b_mat=b_mat,
            terms=model.measurement_terms(state.mu),
        )


def var_gaussian_factor(t: int, y: np.ndarray, ctx: HContext) -> tuple[float, float]:
    """
    The VAR terms of the h_t conditional collapse to exp(−½(q·h² + 2·l·h)).
    Returns (q, l); the e_{t+1} term only exists for t < T.
    """
    periods, m = y.shape
    y_t = y[t].copy()
    y_t[0] = 0.0
    y_prev = y[t - 1] if t > 0 else np.zeros(m)
    resid = y_t - ctx.alpha - ctx.b_mat @ y_prev
    q = ctx.sigma_inv[0, 0]
    l = float(ctx.sigma_inv[0] @ resid)
    if t < periods - 1:
        b_col = ctx.b_mat[:, 0]
        nxt = y[t + 1] - ctx.alpha - ctx.b_mat @ y_t
        s_b = ctx.sigma_inv @ b_col
        q += float(b_col @ s_b)
        l -= float(s_b @ nxt)
    return float(q), l


def h_log_density(h_t: float, t: int, terms: MeasurementTerms, q: float, l: float) -> float:
    """Unnormalised log density of h_t given everything else."""
    try:
        measurement = (
            terms.rr[t] * math.exp(-h_t) - 2.0 * terms.ru[t] * math.exp(-h_t / 2.0) + terms.uu[t]
        )
    except OverflowError:
        return float("-inf")
    return -h_t / 2.0 - measurement / 2.0 - 0.5 * (q * h_t * h_t + 2.0 * l * h_t)


def mh_accept(log_ratio: float, rng: np.random.Generator) -> bool:
    if log_ratio >= 0.0:
        return True
    if not math.isfinite(log_ratio):
        return False
    return bool(rng.random() < math.exp(log_ratio))


def sample_h(
    t: int,
    state: ChainState,
    model: JointModel,
    rng: np.random.Generator,
    y: Optional[np.ndarray] = None,
    ctx: Optional[HContext] = None,
) -> tuple[float, bool]:
    """
    One random-walk Metropolis–Hastings step for h_t with proposal scale
    `state.mh_scales[t]`. Returns (new value, accepted).
    """
    ctx = ctx or HContext.build(state, model)
    y = model.y_matrix(state.h) if y is None else y
    q, l = var_gaussian_factor(t, y, ctx)
    current = float(state.h[t])
    proposal = current + float(state.mh_scales[t]) * float(rng.standard_normal())
    log_ratio = h_log_density(proposal, t, ctx.terms, q, l) - h_log_density(current, t, ctx.terms, q, l)
    if mh_accept(log_ratio, rng):
        return proposal, True
    return current, False


def beta_posterior_moments(
    y: np.ndarray, sigma_mat: np.ndarray, priors: Priors
) -> tuple[np.ndarray, tuple[np.ndarray, bool]]:
    """
    Posterior mean of β and the Cholesky factor of its precision
    Ω̂⁻¹ = Σ⁻¹ ⊗ X′X + Ω0⁻¹, where X has rows (1, y′_{t−1}).
    """
    m = y.shape[1]
    x = JointModel.lagged_design(y)
    try:
        sigma_inv = linalg.cho_solve(linalg.cho_factor(sigma_mat, lower=True), np.eye(m))
        omega0_inv = linalg.cho_solve(linalg.cho_factor(priors.omega0, lower=True), np.eye(m * (m + 1)))
    except linalg.LinAlgError as e:
        raise NumericalError(f"cannot invert Σ or Ω0: {e}") from e
    precision = np.kron(sigma_inv, x.T @ x) + omega0_inv
    rhs = (x.T @ y @ sigma_inv).T.ravel() + omega0_inv @ priors.beta0
    try:
        factor = linalg.cho_factor(precision, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError(f"posterior precision of β is not positive definite: {e}") from e
    return linalg.cho_solve(factor, rhs), factor


@dataclass(frozen=True)
class BetaDraw:
    beta: np.ndarray
    tries: int
    stalled: bool


def sample_beta(
    state: ChainState,
    model: JointModel,
    rng: np.random.Generator,
    max_tries: int = 1_000,
    y: Optional[np.ndarray] = None,
) -> BetaDraw:
    """
    β from its Gaussian conditional truncated to stationary B. After
    `max_tries` explosive proposals the previous β is kept and the draw is
    flagged as stalled.
    """
    y = model.y_matrix(state.h) if y is None else y
    return draw_stationary_beta(y, state.sigma_mat, model.priors, rng, state.beta, max_tries)


def draw_stationary_beta(
    y: np.ndarray,
    sigma_mat: np.ndarray,
    priors: Priors,
    rng: np.random.Generator,
    previous: np.ndarray,
    max_tries: int = 1_000,
) -> BetaDraw:
    m = y.shape[1]
    mean, (chol, _) = beta_posterior_moments(y, sigma_mat, priors)
    upper = np.tril(chol).T
    for attempt in range(1, max_tries + 1):
        z = rng.standard_normal(mean.shape[0])
        candidate = mean + linalg.solve_triangular(upper, z, lower=False)
        _, b_mat = unpack_coefficients(candidate, m)
        if spectral_radius(b_mat) < 1.0:
            return BetaDraw(beta=candidate, tries=attempt, stalled=False)
    logger.debug(f"No stationary β in {max_tries} proposals; keeping the previous draw")
    return BetaDraw(beta=np.array(previous, dtype=float), tries=max_tries, stalled=True)


def sample_sigma_mat(
    state: ChainState,
    model: JointModel,
    rng: np.random.Generator,
    y: Optional[np.ndarray] = None,
) -> np.ndarray:
    y = model.y_matrix(state.h) if y is None else y
    return draw_sigma_mat(y, state.beta, model.priors, rng)


def draw_sigma_mat(
    y: np.ndarray, beta: np.ndarray, priors: Priors, rng: np.random.Generator
) -> np.ndarray:
    """Σ ~ IW(T + ν0, E′E + Σ0)."""
    periods, m = y.shape
    resid = JointModel.var_residuals(y, beta)
    scale = resid.T @ resid + priors.sigma0
    try:
        np.linalg.cholesky(scale)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"inverse-Wishart scale E'E + Σ0 is not positive definite: {e}") from e
    draw = np.atleast_2d(
        stats.invwishart.rvs(df=periods + priors.nu0, scale=scale, random_state=rng)
    )
    draw = (draw + draw.T) / 2.0
    try:
        np.linalg.cholesky(draw)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Σ draw is not positive definite: {e}") from e
    return draw
