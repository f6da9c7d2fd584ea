from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from models import ChainState, Dataset, Priors
from stats.order_stats import IllConditionedGridError, order_stat_covariance
from utils.errors import NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeasurementTerms:
    """
    Per-period pieces of v′W*⁻¹v for the current μ, where v = r − e^{h/2}u and
    r = ln x − μ:  v′W*⁻¹v = rr − 2e^{h/2}·ru + e^h·uu.
    """

    rr: np.ndarray
    ru: np.ndarray
    uu: np.ndarray


class JointModel:
    """
    Dataset and resolved priors plus everything the conditionals reuse:
    ln x_t, u_t and the measurement precision W*_t⁻¹ = n_t W_t⁻¹ per period.
    """

    def __init__(self, dataset: Dataset, priors: Priors):
        self.dataset = dataset
        self.priors = priors.resolve(dataset.m)
        self.periods = dataset.periods
        self.m = dataset.m
        self.k = dataset.income.k
        self.variables = dataset.variables

        self.log_x = np.asarray(dataset.income.log_endpoints, dtype=float)
        self.u = np.vstack([grid.quantiles for grid in dataset.grids])
        self.precision = np.empty((self.periods, self.k, self.k))
        for t, grid in enumerate(dataset.grids):
            try:
                cov = order_stat_covariance(grid)
                factor = linalg.cho_factor(cov.w, lower=True)
            except (IllConditionedGridError, linalg.LinAlgError) as e:
                raise NumericalError(
                    f"W*_t is not positive definite for period {t} ({dataset.dates[t]}): {e}"
                ) from e
            self.precision[t] = dataset.income.total[t] * linalg.cho_solve(factor, np.eye(self.k))

        ones = np.ones(self.k)
        self.one_prec_one = np.einsum("i,tij,j->t", ones, self.precision, ones)
        self.one_prec_u = np.einsum("i,tij,tj->t", ones, self.precision, self.u)
        self.one_prec_logx = np.einsum("i,tij,tj->t", ones, self.precision, self.log_x)
        self.uu = np.einsum("ti,tij,tj->t", self.u, self.precision, self.u)
        self.macro = np.asarray(dataset.macro.values, dtype=float).reshape(self.periods, self.m - 1)

    def measurement_terms(self, mu: np.ndarray) -> MeasurementTerms:
        resid = self.log_x - mu[:, None]
        prec_resid = np.einsum("tij,tj->ti", self.precision, resid)
        return MeasurementTerms(
            rr=np.einsum("ti,ti->t", resid, prec_resid),
            ru=np.einsum("ti,ti->t", self.u, prec_resid),
            uu=self.uu,
        )

    def y_matrix(self, h: np.ndarray) -> np.ndarray:
        """Y with y_{1,t} = h_t followed by the macro columns, T x m."""
        return np.column_stack([np.asarray(h, dtype=float), self.macro])

    @staticmethod
    def lagged_design(y: np.ndarray) -> np.ndarray:
        """Rows (1, y′_{t−1}) with y_0 = 0, T x (m + 1)."""
        lagged = np.vstack([np.zeros((1, y.shape[1])), y[:-1]])
        return np.column_stack([np.ones(y.shape[0]), lagged])

    @staticmethod
    def var_residuals(y: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """E with rows e_t = y_t − α − B y_{t−1}."""
        m = y.shape[1]
        coef = np.asarray(beta, dtype=float).reshape(m, m + 1)
        return y - JointModel.lagged_design(y) @ coef.T


def measurement_log_density(h: np.ndarray, terms: MeasurementTerms) -> np.ndarray:
    """log of exp(−h/2)·exp(−v′W*⁻¹v / (2e^h)) per period."""
    h = np.asarray(h, dtype=float)
    with np.errstate(over="ignore"):
        quad = terms.rr * np.exp(-h) - 2.0 * terms.ru * np.exp(-h / 2.0) + terms.uu
    return -h / 2.0 - quad / 2.0


def joint_log_posterior(state: ChainState, model: JointModel) -> float:
    """Unnormalised log posterior of (μ, h, β, Σ) given the data."""
    priors = model.priors
    m = model.m
    terms = model.measurement_terms(state.mu)
    log_post = float(np.sum(measurement_log_density(state.h, terms)))

    y = model.y_matrix(state.h)
    resid = model.var_residuals(y, state.beta)
    try:
        chol = np.linalg.cholesky(state.sigma_mat)
    except np.linalg.LinAlgError:
        return float("-inf")
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    whitened = linalg.solve_triangular(chol, resid.T, lower=True)
    log_post += -0.5 * model.periods * log_det - 0.5 * float(np.sum(whitened**2))

    log_post += -0.5 * float(np.sum((state.mu - priors.mu0) ** 2)) / priors.tau0_sq
    diff = state.beta - priors.beta0
    log_post += -0.5 * float(diff @ np.linalg.solve(priors.omega0, diff))
    sigma_inv = linalg.cho_solve((chol, True), np.eye(m))
    log_post += -0.5 * (priors.nu0 + m + 1) * log_det - 0.5 * float(np.trace(priors.sigma0 @ sigma_inv))
    return log_post
