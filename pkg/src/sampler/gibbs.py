from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from models import ChainState, Dataset, PosteriorDraws, Priors, SamplerConfig
from sampler.conditionals import (
    HContext,
    draw_sigma_mat,
    draw_stationary_beta,
    sample_beta,
    sample_h,
    sample_mu_all,
    sample_sigma_mat,
)
from sampler.model import JointModel, joint_log_posterior
from stats.inequality import grouped_gini, sigma_from_gini
from stats.order_stats import static_gls_fit
from utils.errors import InequalityVarError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

INITIAL_SIGMA_SCALE = 0.1
FIRST_STAGE = ("gls", "grouped")


class SamplerError(NumericalError):
    """The chain hit a non-finite or non-positive-definite quantity."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TwoStepError(NumericalError):
    """The first-stage static fit failed for one or more periods."""

    def __init__(self, periods: List[str], reasons: Dict[str, str]):
        super().__init__(f"static fit failed for periods {periods}: {reasons}")
        self.periods = periods
        self.reasons = reasons


@dataclass
class ChainMonitor:
    """Running acceptance and stall bookkeeping for one chain."""

    periods: int
    burn_in_accepts: np.ndarray = field(init=False)
    sampling_accepts: np.ndarray = field(init=False)
    burn_in_steps: int = 0
    sampling_steps: int = 0
    stalls: int = 0
    max_tries_used: int = 0

    def __post_init__(self):
        self.burn_in_accepts = np.zeros(self.periods)
        self.sampling_accepts = np.zeros(self.periods)

    def record(self, accepted: np.ndarray, burn_in: bool) -> None:
        if burn_in:
            self.burn_in_accepts += accepted
            self.burn_in_steps += 1
        else:
            self.sampling_accepts += accepted
            self.sampling_steps += 1

    def acceptance(self) -> np.ndarray:
        if self.sampling_steps:
            return self.sampling_accepts / self.sampling_steps
        return self.burn_in_accepts / max(self.burn_in_steps, 1)

    def to_dict(self) -> Dict[str, Any]:
        rates = self.acceptance()
        return {
            "h_acceptance_mean": float(rates.mean()),
            "h_acceptance_min": float(rates.min()),
            "h_acceptance_max": float(rates.max()),
            "h_acceptance": rates.tolist(),
            "stationarity_stalls": self.stalls,
            "max_stationarity_tries_used": self.max_tries_used,
        }


def initial_state(model: JointModel, config: SamplerConfig, rng_seed: int) -> ChainState:
    """
    μ⁰ and h⁰ from the per-period static GLS fit, β⁰ = 0, Σ⁰ = 0.1·I. Periods
    the static fit cannot handle start from the sample mean of ln x and h = 0.
    """
    mu = np.empty(model.periods)
    h = np.empty(model.periods)
    fallbacks = []
    for t, grid in enumerate(model.dataset.grids):
        try:
            fit = static_gls_fit(model.dataset.income.endpoint_matrix[t], grid, int(model.dataset.income.total[t]))
            mu[t], h[t] = fit.mu, fit.h
        except InequalityVarError as e:
            fallbacks.append(str(model.dataset.dates[t]))
            logger.debug(f"Static start unavailable for period {t}: {e}")
            mu[t], h[t] = float(np.mean(model.log_x[t])), 0.0
    if fallbacks:
        logger.warning(f"Using default starting values for {len(fallbacks)} periods: {fallbacks}")
    return ChainState(
        mu=mu,
        h=h,
        beta=np.zeros(model.m * (model.m + 1)),
        sigma_mat=INITIAL_SIGMA_SCALE * np.eye(model.m),
        mh_scales=np.full(model.periods, config.initial_scale),
        rng_seed=rng_seed,
    )


def gibbs_sweep(
    state: ChainState,
    model: JointModel,
    rng: np.random.Generator,
    config: SamplerConfig,
    monitor: Optional[ChainMonitor] = None,
) -> np.ndarray:
    """
    One systematic scan: μ (all t), h_1..h_T, β, Σ. Updates `state` in place
    and returns the per-period MH acceptance indicators.
    """
    state.mu = sample_mu_all(state, model, rng)

    ctx = HContext.build(state, model)
    y = model.y_matrix(state.h)
    accepted = np.zeros(model.periods)
    for t in range(model.periods):
        value, ok = sample_h(t, state, model, rng, y=y, ctx=ctx)
        if ok:
            state.h[t] = value
            y[t, 0] = value
            accepted[t] = 1.0

    draw = sample_beta(state, model, rng, max_tries=config.max_stationarity_tries, y=y)
    state.beta = draw.beta
    if monitor is not None:
        monitor.max_tries_used = max(monitor.max_tries_used, draw.tries)
        if draw.stalled:
            monitor.stalls += 1
    state.sigma_mat = sample_sigma_mat(state, model, rng, y=y)
    return accepted


def adapt_scales(state: ChainState, accepted: np.ndarray, iteration: int, config: SamplerConfig) -> None:
    """Robbins–Monro step on the log proposal scale towards the target acceptance."""
    gain = iteration ** (-config.adaptation_exponent)
    state.mh_scales = np.exp(np.log(state.mh_scales) + gain * (accepted - config.target_acceptance))


def _check_finite(state: ChainState, model: JointModel, iteration: int, monitor: ChainMonitor) -> float:
    log_post = joint_log_posterior(state, model)
    if not math.isfinite(log_post) or not (
        np.all(np.isfinite(state.mu)) and np.all(np.isfinite(state.h))
    ):
        raise SamplerError(
            f"non-finite joint log posterior at iteration {iteration}",
            {"iteration": iteration, "log_posterior": log_post, **monitor.to_dict()},
        )
    return log_post


def run_joint_mcmc(
    data: Dataset,
    priors: Optional[Priors] = None,
    config: Optional[SamplerConfig] = None,
    rng_seed: int = 0,
) -> PosteriorDraws:
    """
    Joint posterior of the inequality state and the VAR. Proposal scales adapt
    during burn-in only and are frozen afterwards; identical inputs and seed
    give identical draws.
    """
    priors = priors or Priors()
    config = config or SamplerConfig()
    model = JointModel(data, priors)
    rng = np.random.default_rng(rng_seed)
    state = initial_state(model, config, rng_seed)
    monitor = ChainMonitor(model.periods)

    n_draws = config.draws
    m = model.m
    mu_draws = np.empty((n_draws, model.periods))
    h_draws = np.empty((n_draws, model.periods))
    beta_draws = np.empty((n_draws, m * (m + 1)))
    sigma_draws = np.empty((n_draws, m, m))

    logger.info(
        f"Joint sampler: T={model.periods}, k={model.k}, m={m}, "
        f"{config.burn_in} burn-in + {n_draws}x{config.thin} iterations, seed {rng_seed}"
    )
    started = time.monotonic()
    stored = 0
    for iteration in range(1, config.iterations + 1):
        burning = iteration <= config.burn_in
        try:
            accepted = gibbs_sweep(state, model, rng, config, monitor)
        except NumericalError as e:
            raise SamplerError(
                f"iteration {iteration}: {e}", {"iteration": iteration, **monitor.to_dict()}
            ) from e
        monitor.record(accepted, burning)
        if burning:
            adapt_scales(state, accepted, iteration, config)
        elif (iteration - config.burn_in) % config.thin == 0:
            mu_draws[stored] = state.mu
            h_draws[stored] = state.h
            beta_draws[stored] = state.beta
            sigma_draws[stored] = state.sigma_mat
            stored += 1

        if iteration % config.log_every == 0 or iteration == config.iterations:
            log_post = _check_finite(state, model, iteration, monitor)
            phase = "burn-in" if burning else "sampling"
            logger.info(
                f"[{phase}] iteration {iteration}/{config.iterations}: "
                f"log posterior {log_post:.2f}, h acceptance {monitor.acceptance().mean():.3f}, "
                f"stalls {monitor.stalls}"
            )
            if burning:
                logger.debug(
                    f"MH scales in [{state.mh_scales.min():.4f}, {state.mh_scales.max():.4f}], "
                    f"median {np.median(state.mh_scales):.4f}"
                )

    elapsed = time.monotonic() - started
    meta = {
        "method": "joint",
        "seed": rng_seed,
        "sampler": config.to_dict(),
        "priors": model.priors.to_dict(),
        "final_mh_scales": state.mh_scales.tolist(),
        **monitor.to_dict(),
    }
    if monitor.stalls:
        logger.warning(f"β stationarity stalled in {monitor.stalls} iterations")
    logger.info(f"Joint sampler finished in {elapsed:.1f}s")
    return PosteriorDraws(
        mu=mu_draws,
        h=h_draws,
        beta=beta_draws,
        sigma=sigma_draws,
        variables=data.variables,
        dates=[str(d) for d in data.dates],
        meta=meta,
    )


def grouped_sigma_estimate(endpoints: np.ndarray, cum_counts: np.ndarray, total: int) -> float:
    """
    σ̂ from the descriptive Gini of bracket midpoints: class means are the
    midpoints of [0, x_1], ..., [x_{k−1}, x_k] and x_k for the open top bracket.
    """
    endpoints = np.asarray(endpoints, dtype=float)
    lower = np.concatenate([[0.0], endpoints])
    upper = np.concatenate([endpoints, [endpoints[-1]]])
    means = (lower + upper) / 2.0
    means[-1] = endpoints[-1]
    bounds = np.concatenate([np.asarray(cum_counts, dtype=float) / total, [1.0]])
    return sigma_from_gini(grouped_gini(bounds, means))


def first_stage_h(data: Dataset, first_stage: str = "gls") -> tuple[np.ndarray, np.ndarray]:
    """
    Per-period (μ̂_t, ĥ_t). μ̂ is NaN under the grouped first stage, which
    recovers only the dispersion.
    """
    if first_stage not in FIRST_STAGE:
        raise ValidationError(f"unknown first stage '{first_stage}', expected one of {FIRST_STAGE}")
    income = data.income
    mu = np.full(data.periods, np.nan)
    h = np.empty(data.periods)
    failures: Dict[str, str] = {}
    for t, grid in enumerate(data.grids):
        label = str(data.dates[t])
        try:
            if first_stage == "gls":
                fit = static_gls_fit(income.endpoint_matrix[t], grid, int(income.total[t]))
                mu[t], h[t] = fit.mu, fit.h
            else:
                sigma = grouped_sigma_estimate(
                    income.endpoint_matrix[t], income.cum_counts[t], int(income.total[t])
                )
                if sigma <= 0:
                    raise NumericalError("grouped Gini is zero")
                h[t] = 2.0 * math.log(sigma)
        except InequalityVarError as e:
            failures[label] = str(e)
    if failures:
        raise TwoStepError(list(failures), failures)
    return mu, h


def run_twostep(
    data: Dataset,
    priors: Optional[Priors] = None,
    config: Optional[SamplerConfig] = None,
    rng_seed: int = 0,
    first_stage: str = "gls",
) -> PosteriorDraws:
    """
    Plug the static per-period estimate ĥ_t into the VAR as observed data and
    run the Gibbs sampler for (β, Σ) only. The stored μ/h draws repeat the
    fixed first-stage values.
    """
    priors = (priors or Priors()).resolve(data.m)
    config = config or SamplerConfig()
    mu_hat, h_hat = first_stage_h(data, first_stage)
    macro = np.asarray(data.macro.values, dtype=float).reshape(data.periods, data.m - 1)
    y = np.column_stack([h_hat, macro])
    m = data.m
    rng = np.random.default_rng(rng_seed)

    beta = np.zeros(m * (m + 1))
    sigma_mat = INITIAL_SIGMA_SCALE * np.eye(m)
    stalls = 0
    beta_draws = np.empty((config.draws, m * (m + 1)))
    sigma_draws = np.empty((config.draws, m, m))
    logger.info(
        f"Two-step sampler ({first_stage} first stage): T={data.periods}, m={m}, "
        f"{config.burn_in} burn-in + {config.draws}x{config.thin} iterations, seed {rng_seed}"
    )
    stored = 0
    for iteration in range(1, config.iterations + 1):
        try:
            draw = draw_stationary_beta(y, sigma_mat, priors, rng, beta, config.max_stationarity_tries)
            beta = draw.beta
            stalls += int(draw.stalled)
            sigma_mat = draw_sigma_mat(y, beta, priors, rng)
        except NumericalError as e:
            raise SamplerError(
                f"iteration {iteration}: {e}", {"iteration": iteration, "stationarity_stalls": stalls}
            ) from e
        if iteration > config.burn_in and (iteration - config.burn_in) % config.thin == 0:
            beta_draws[stored] = beta
            sigma_draws[stored] = sigma_mat
            stored += 1
        if iteration % config.log_every == 0:
            logger.info(f"[two-step] iteration {iteration}/{config.iterations}, stalls {stalls}")

    if stalls:
        logger.warning(f"β stationarity stalled in {stalls} iterations")
    meta = {
        "method": "twostep",
        "first_stage": first_stage,
        "seed": rng_seed,
        "sampler": config.to_dict(),
        "priors": priors.to_dict(),
        "stationarity_stalls": stalls,
    }
    return PosteriorDraws(
        mu=np.tile(mu_hat, (config.draws, 1)),
        h=np.tile(h_hat, (config.draws, 1)),
        beta=beta_draws,
        sigma=sigma_draws,
        variables=data.variables,
        dates=[str(d) for d in data.dates],
        meta=meta,
    )
