import math
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from scipy import integrate, stats

from experiments import generate_synthetic_dataset
from models import (
    ChainState,
    Dataset,
    GroupedIncomeSeries,
    MacroPanel,
    Priors,
    SamplerConfig,
    SyntheticTruth,
    pack_coefficients,
    spectral_radius,
    unpack_coefficients,
)
from sampler import (
    HContext,
    JointModel,
    TwoStepError,
    beta_posterior_moments,
    estimated_inequality_frame,
    first_stage_h,
    initial_state,
    joint_log_posterior,
    mu_conditional,
    read_draws,
    run_joint_mcmc,
    run_twostep,
    sample_h,
    sample_mu,
    sample_mu_all,
    write_draws,
)
from sampler.conditionals import draw_sigma_mat, draw_stationary_beta, h_log_density, var_gaussian_factor
from utils.errors import DataIOError, NumericalError, ValidationError


def grouped_dataset(log_x, probs, n, macro=None, names=("ssr",)) -> Dataset:
    log_x = np.atleast_2d(np.asarray(log_x, dtype=float))
    periods = log_x.shape[0]
    dates = pd.period_range("2010Q1", periods=periods, freq="Q")
    cum = np.round(np.asarray(probs) * n).astype(int)
    income = GroupedIncomeSeries(
        dates=dates,
        endpoints=np.exp(log_x),
        cum_counts=np.tile(cum, (periods, 1)),
        total=n,
    )
    if macro is None:
        macro = np.zeros((periods, len(names)))
    macro = np.asarray(macro, dtype=float).reshape(periods, len(names))
    return Dataset(income=income, macro=MacroPanel(dates=dates, names=list(names), values=macro))


def chain_state(model: JointModel, mu, h, beta=None, sigma_mat=None, scale=0.5) -> ChainState:
    m = model.m
    return ChainState(
        mu=np.atleast_1d(np.asarray(mu, dtype=float)).copy(),
        h=np.atleast_1d(np.asarray(h, dtype=float)).copy(),
        beta=np.zeros(m * (m + 1)) if beta is None else np.asarray(beta, dtype=float),
        sigma_mat=np.eye(m) if sigma_mat is None else np.asarray(sigma_mat, dtype=float),
        mh_scales=np.full(model.periods, scale),
        rng_seed=0,
    )


def noiseless_var(alpha, b_mat, periods):
    y = np.empty((periods, len(alpha)))
    prev = np.zeros(len(alpha))
    for t in range(periods):
        prev = alpha + b_mat @ prev
        y[t] = prev
    return y


def test_coefficient_layout():
    alpha = np.array([1.0, 2.0])
    b_mat = np.array([[3.0, 4.0], [5.0, 6.0]])
    beta = pack_coefficients(alpha, b_mat)
    assert beta.tolist() == [1.0, 3.0, 4.0, 2.0, 5.0, 6.0]
    a2, b2 = unpack_coefficients(beta, 2)
    np.testing.assert_array_equal(a2, alpha)
    np.testing.assert_array_equal(b2, b_mat)


def test_priors_defaults_and_overrides():
    priors = Priors().resolve(3)
    assert priors.beta0.shape == (12,)
    np.testing.assert_array_equal(priors.omega0, 100.0 * np.eye(12))
    np.testing.assert_array_equal(priors.sigma0, 0.01 * np.eye(3))
    assert priors.nu0 == 4.0

    custom = Priors.from_overrides({"tau0_sq": 4.0, "omega0_scale": 10.0, "beta0": 0.5}).resolve(2)
    assert custom.tau0_sq == 4.0
    np.testing.assert_array_equal(custom.omega0, 10.0 * np.eye(6))
    assert custom.beta0.tolist() == [0.5] * 6

    with pytest.raises(ValidationError):
        Priors.from_overrides({"lambda": 1.0})
    with pytest.raises(ValidationError):
        Priors(nu0=1.0).resolve(3)
    with pytest.raises(ValidationError):
        Priors(tau0_sq=0.0).resolve(1)


def test_sampler_config_validation():
    assert SamplerConfig().iterations == 20_000
    assert SamplerConfig(burn_in=5, draws=10, thin=3).iterations == 35
    for bad in ({"burn_in": 0}, {"draws": 0}, {"target_acceptance": 1.0}, {"adaptation_exponent": 0.5}):
        with pytest.raises(ValidationError):
            SamplerConfig(**bad)
    with pytest.raises(ValidationError):
        SamplerConfig.from_dict({"iterations": 10})


def test_mu_mean_single_observation_limit():
    dataset = grouped_dataset([[2.0]], [0.3], 1_000)
    model = JointModel(dataset, Priors(tau0_sq=1e12))
    h = 0.4
    mean, var = mu_conditional(0, h, model)
    u = dataset.grids[0].quantiles[0]
    assert mean == pytest.approx(2.0 - math.exp(h / 2) * u, abs=1e-8)
    assert var > 0


@pytest.mark.parametrize("h", [-1.0, 0.0, 0.7])
def test_mu_mean_on_noise_free_data(h):
    probs = np.array([0.25, 0.5, 0.75])
    u = stats.norm.ppf(probs)
    log_x = 3.0 + math.exp(-0.3) * u
    model = JointModel(grouped_dataset([log_x], probs, 1_000), Priors(tau0_sq=1e12))
    mean, _ = mu_conditional(0, h, model)
    assert mean == pytest.approx(3.0, abs=1e-8)


def test_mu_mean_matches_grid_integration():
    log_x = np.array([1.5, 2.0, 2.3])
    dataset = grouped_dataset([log_x], [0.2, 0.5, 0.7], 500)
    model = JointModel(dataset, Priors(mu0=1.0, tau0_sq=0.05))
    h = -0.5
    mean, var = mu_conditional(0, h, model)

    grid = np.linspace(log_x.mean() - 3.0, log_x.mean() + 3.0, 200_001)
    resid = log_x[None, :] - grid[:, None] - math.exp(h / 2) * model.u[0][None, :]
    quad = np.einsum("gi,ij,gj->g", resid, model.precision[0], resid)
    log_dens = -0.5 * math.exp(-h) * quad - 0.5 * (grid - 1.0) ** 2 / 0.05
    dens = np.exp(log_dens - log_dens.max())
    norm = integrate.trapezoid(dens, grid)
    oracle_mean = integrate.trapezoid(grid * dens, grid) / norm
    oracle_var = integrate.trapezoid((grid - oracle_mean) ** 2 * dens, grid) / norm

    assert mean == pytest.approx(oracle_mean, abs=1e-6)
    assert var == pytest.approx(oracle_var, rel=1e-4)


def test_sample_mu_all_draw_moments():
    dataset = grouped_dataset([[1.5, 2.0, 2.3]], [0.2, 0.5, 0.7], 500)
    model = JointModel(dataset, Priors())
    state = chain_state(model, [2.0], [-0.5])
    rng = np.random.default_rng(1)
    draws = np.array([sample_mu_all(state, model, rng)[0] for _ in range(20_000)])
    mean, var = mu_conditional(0, -0.5, model)
    assert draws.mean() == pytest.approx(mean, abs=4 * math.sqrt(var / 20_000))
    assert draws.var() == pytest.approx(var, rel=0.05)


def test_sample_mu_single_period_moments():
    dataset = grouped_dataset([[1.5, 2.0, 2.3], [1.0, 1.8, 2.9]], [0.2, 0.5, 0.7], 500)
    model = JointModel(dataset, Priors())
    state = chain_state(model, [2.0, 2.0], [-0.5, 0.4])
    rng = np.random.default_rng(4)
    draws = np.array([sample_mu(1, state, model, rng) for _ in range(20_000)])
    mean, var = mu_conditional(1, 0.4, model)
    assert draws.mean() == pytest.approx(mean, abs=4 * math.sqrt(var / 20_000))
    assert draws.var() == pytest.approx(var, rel=0.05)


def test_zero_scale_proposal_is_always_accepted():
    dataset = grouped_dataset([[1.5, 2.5]], [0.3, 0.7], 20, names=())
    model = JointModel(dataset, Priors())
    state = chain_state(model, [2.0], [0.3], scale=0.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        value, accepted = sample_h(0, state, model, rng)
        assert accepted
        assert value == 0.3


def test_h_kernel_preserves_single_period_target():
    dataset = grouped_dataset([[1.6, 2.5]], [0.3, 0.7], 20, names=())
    model = JointModel(dataset, Priors())
    state = chain_state(model, [2.0], [0.0], scale=0.8)
    ctx = HContext.build(state, model)
    y = model.y_matrix(state.h)
    q, l = var_gaussian_factor(0, y, ctx)
    assert q == pytest.approx(1.0)
    assert l == pytest.approx(0.0)

    grid = np.linspace(-8.0, 6.0, 40_001)
    log_dens = np.array([h_log_density(h, 0, ctx.terms, q, l) for h in grid])
    dens = np.exp(log_dens - log_dens.max())
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    cdf /= cdf[-1]

    rng = np.random.default_rng(2718)
    n_iter, burn = 200_000, 2_000
    chain = np.empty(n_iter)
    for i in range(n_iter):
        value, _ = sample_h(0, state, model, rng, y=y, ctx=ctx)
        state.h[0] = value
        chain[i] = value
    result = stats.kstest(chain[burn:], lambda x: np.interp(x, grid, cdf))
    assert result.statistic < 0.02


def test_h_context_rejects_non_positive_definite_sigma():
    model = JointModel(grouped_dataset([[1.6, 2.5]], [0.3, 0.7], 20), Priors())
    state = chain_state(model, [2.0], [0.0], sigma_mat=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NumericalError):
        HContext.build(state, model)
    assert joint_log_posterior(state, model) == float("-inf")


def test_beta_mean_recovers_noiseless_ar1():
    y = noiseless_var(np.array([1.0]), np.array([[0.5]]), 20)
    priors = Priors(omega0=1e8).resolve(1)
    mean, _ = beta_posterior_moments(y, np.array([[1.0]]), priors)
    np.testing.assert_allclose(mean, [1.0, 0.5], atol=1e-6)


def test_beta_mean_layout_on_noiseless_var():
    alpha = np.array([0.3, -0.2])
    b_mat = np.array([[0.6, 0.1], [-0.2, 0.4]])
    y = noiseless_var(alpha, b_mat, 12)
    priors = Priors(omega0=1e8).resolve(2)
    mean, _ = beta_posterior_moments(y, np.array([[1.0, 0.3], [0.3, 2.0]]), priors)
    np.testing.assert_allclose(mean, pack_coefficients(alpha, b_mat), atol=1e-5)


def test_stationary_truncation_stalls_on_explosive_data():
    y = noiseless_var(np.array([0.1]), np.array([[1.5]]), 30)
    priors = Priors().resolve(1)
    previous = np.array([0.0, 0.5])
    draw = draw_stationary_beta(y, np.array([[1e-4]]), priors, np.random.default_rng(0), previous, 50)
    assert draw.stalled
    assert draw.tries == 50
    np.testing.assert_array_equal(draw.beta, previous)


def test_stationary_truncation_accepts_stable_draws():
    rng = np.random.default_rng(5)
    y = noiseless_var(np.array([0.1, 0.0]), np.array([[0.5, 0.0], [0.1, 0.3]]), 40)
    y += 0.05 * rng.standard_normal(y.shape)
    priors = Priors().resolve(2)
    for _ in range(50):
        draw = draw_stationary_beta(y, 0.01 * np.eye(2), priors, rng, np.zeros(6))
        assert not draw.stalled
        assert spectral_radius(unpack_coefficients(draw.beta, 2)[1]) < 1.0


def test_inverse_wishart_mean_with_zero_residuals():
    alpha = np.array([0.3, -0.2])
    b_mat = np.array([[0.6, 0.1], [-0.2, 0.4]])
    y = noiseless_var(alpha, b_mat, 12)
    c = 0.5
    priors = Priors(sigma0=c, nu0=3.0).resolve(2)
    rng = np.random.default_rng(8)
    draws = np.array([draw_sigma_mat(y, pack_coefficients(alpha, b_mat), priors, rng) for _ in range(20_000)])
    for draw in draws[:500]:
        np.linalg.cholesky(draw)
    expected = c * np.eye(2) / (12 + 3.0 - 2 - 1)
    np.testing.assert_allclose(np.diag(draws.mean(axis=0)), np.diag(expected), rtol=0.03)
    assert abs(draws.mean(axis=0)[0, 1]) < 0.002 * c


def test_initial_state_uses_static_fit(small_truth):
    sample = generate_synthetic_dataset(small_truth)
    model = JointModel(sample.dataset, Priors())
    state = initial_state(model, SamplerConfig(), 3)
    mu_hat, h_hat = first_stage_h(sample.dataset)
    np.testing.assert_allclose(state.mu, mu_hat)
    np.testing.assert_allclose(state.h, h_hat)
    np.testing.assert_allclose(state.mu, sample.mu, atol=0.1)
    np.testing.assert_allclose(state.h, sample.h, atol=0.2)
    np.testing.assert_array_equal(state.sigma_mat, 0.1 * np.eye(2))
    assert math.isfinite(joint_log_posterior(state, model))


def test_first_stage_recovers_latent_path(small_truth):
    sample = generate_synthetic_dataset(small_truth)
    mu_hat, h_hat = first_stage_h(sample.dataset)
    np.testing.assert_allclose(mu_hat, small_truth.mu_bar, atol=0.1)
    np.testing.assert_allclose(h_hat, sample.h, atol=0.2)
    assert np.mean(np.abs(h_hat - sample.h)) < 0.08


def test_first_stage_with_unit_median_incomes(small_truth):
    sample = generate_synthetic_dataset(replace(small_truth, mu_bar=0.0))
    mu_hat, h_hat = first_stage_h(sample.dataset)
    np.testing.assert_allclose(mu_hat, 0.0, atol=0.1)
    np.testing.assert_allclose(h_hat, sample.h, atol=0.2)
    draws = run_twostep(sample.dataset, Priors(), SamplerConfig(burn_in=20, draws=10, log_every=20), rng_seed=1)
    np.testing.assert_array_equal(draws.h[0], h_hat)



def test_joint_sampler_is_deterministic(small_truth, tiny_sampler):
    dataset = generate_synthetic_dataset(small_truth).dataset
    first = run_joint_mcmc(dataset, Priors(), tiny_sampler, rng_seed=11)
    second = run_joint_mcmc(dataset, Priors(), tiny_sampler, rng_seed=11)
    other = run_joint_mcmc(dataset, Priors(), tiny_sampler, rng_seed=12)
    for name in ("mu", "h", "beta", "sigma"):
        np.testing.assert_array_equal(getattr(first, name), getattr(second, name))
    assert first.meta == second.meta
    assert not np.array_equal(first.h, other.h)


def test_joint_sampler_draw_contracts(small_truth, tiny_sampler):
    dataset = generate_synthetic_dataset(small_truth).dataset
    draws = run_joint_mcmc(dataset, Priors(), tiny_sampler, rng_seed=4)
    assert draws.count == tiny_sampler.draws
    assert draws.variables == ["inequality", "ssr"]
    assert draws.dates[0] == "2002Q1"
    assert all(spectral_radius(b) < 1.0 for b in draws.b_matrices())
    for sigma in draws.sigma:
        np.testing.assert_allclose(sigma, sigma.T)
        np.linalg.cholesky(sigma)
    meta = draws.meta
    assert meta["method"] == "joint"
    assert meta["seed"] == 4
    assert 0.0 <= meta["h_acceptance_min"] <= meta["h_acceptance_max"] <= 1.0
    assert len(meta["final_mh_scales"]) == dataset.periods
    assert not draws.h.flags.writeable


def test_thinning_keeps_requested_draws(small_truth):
    dataset = generate_synthetic_dataset(small_truth).dataset
    draws = run_joint_mcmc(dataset, Priors(), SamplerConfig(burn_in=50, draws=20, thin=3, log_every=50), 1)
    assert draws.count == 20


def test_twostep_fixes_first_state(small_truth, tiny_sampler):
    dataset = generate_synthetic_dataset(small_truth).dataset
    mu_hat, h_hat = first_stage_h(dataset)
    first = run_twostep(dataset, Priors(), tiny_sampler, rng_seed=2)
    second = run_twostep(dataset, Priors(), tiny_sampler, rng_seed=9)
    np.testing.assert_array_equal(first.h[0], h_hat)
    np.testing.assert_array_equal(first.h, second.h)
    np.testing.assert_array_equal(first.mu[-1], mu_hat)
    assert first.meta["method"] == "twostep"
    assert all(spectral_radius(b) < 1.0 for b in first.b_matrices())


def test_twostep_grouped_first_stage(small_truth, tiny_sampler):
    dataset = generate_synthetic_dataset(small_truth).dataset
    draws = run_twostep(dataset, Priors(), tiny_sampler, rng_seed=2, first_stage="grouped")
    assert np.isnan(draws.mu).all()
    assert np.isfinite(draws.h).all()
    assert draws.meta["first_stage"] == "grouped"
    with pytest.raises(ValidationError):
        first_stage_h(dataset, "kernel")


def test_twostep_lists_failing_periods():
    dataset = grouped_dataset([[2.0], [2.1]], [0.4], 1_000)
    with pytest.raises(TwoStepError) as excinfo:
        run_twostep(dataset, Priors(), SamplerConfig(burn_in=1, draws=1))
    assert excinfo.value.periods == ["2010Q1", "2010Q2"]


def test_draws_directory_round_trip(tmp_path, small_truth, tiny_sampler):
    dataset = generate_synthetic_dataset(small_truth).dataset
    draws = run_joint_mcmc(dataset, Priors(), tiny_sampler, rng_seed=6)
    write_draws(draws, tmp_path / "a")
    loaded = read_draws(tmp_path / "a")
    assert loaded.variables == draws.variables
    assert loaded.dates == draws.dates
    assert loaded.meta == draws.meta
    np.testing.assert_allclose(loaded.beta, draws.beta, rtol=1e-9)
    np.testing.assert_allclose(loaded.sigma, draws.sigma, rtol=1e-9)

    write_draws(run_joint_mcmc(dataset, Priors(), tiny_sampler, rng_seed=6), tmp_path / "b")
    for name in ("mu.csv", "h.csv", "beta.csv", "sigma.csv", "meta.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    header = (tmp_path / "a" / "beta.csv").read_text().splitlines()[0]
    assert header == "draw,alpha[inequality],B[inequality:inequality],B[inequality:ssr],alpha[ssr],B[ssr:inequality],B[ssr:ssr]"


def test_read_draws_requires_complete_directory(tmp_path):
    (tmp_path / "h.csv").write_text("draw,2002Q1\n0,0.1\n")
    with pytest.raises(DataIOError):
        read_draws(tmp_path)


def test_estimated_inequality_frame(small_truth, tiny_sampler):
    dataset = generate_synthetic_dataset(small_truth).dataset
    draws = run_joint_mcmc(dataset, Priors(), tiny_sampler, rng_seed=6)
    frame = estimated_inequality_frame(draws)
    assert len(frame) == dataset.periods
    assert {"h_q16", "h_q50", "h_q84", "sigma_q50", "gini_q50", "h_mean"} <= set(frame.columns)
    assert (frame["gini_q16"] <= frame["gini_q50"]).all()
    assert (frame["gini_q50"] <= frame["gini_q84"]).all()
    np.testing.assert_allclose(frame["sigma_q50"], np.exp(frame["h_q50"] / 2))


@pytest.mark.slow
def test_var_gibbs_recovers_long_series():
    truth_b = np.array([[0.6, 0.1], [-0.2, 0.4]])
    truth_alpha = np.array([0.2, -0.1])
    truth_sigma = np.array([[0.5, 0.1], [0.1, 0.3]])
    rng = np.random.default_rng(77)
    chol = np.linalg.cholesky(truth_sigma)
    y = np.empty((2_000, 2))
    prev = np.zeros(2)
    for t in range(2_000):
        prev = truth_alpha + truth_b @ prev + chol @ rng.standard_normal(2)
        y[t] = prev

    priors = Priors().resolve(2)
    beta, sigma_mat = np.zeros(6), np.eye(2)
    betas, sigmas = [], []
    for i in range(3_000):
        beta = draw_stationary_beta(y, sigma_mat, priors, rng, beta).beta
        sigma_mat = draw_sigma_mat(y, beta, priors, rng)
        if i >= 500:
            betas.append(beta)
            sigmas.append(sigma_mat)
    betas, sigmas = np.array(betas), np.array(sigmas)
    b_draws = betas.reshape(-1, 2, 3)[:, :, 1:]
    assert np.all(np.abs(b_draws.mean(axis=0) - truth_b) < 3 * b_draws.std(axis=0))
    assert np.all(np.abs(sigmas.mean(axis=0) - truth_sigma) < 3 * sigmas.std(axis=0))


@pytest.mark.slow
def test_joint_sampler_tracks_sigma_path(fixtures_dir):
    truth = SyntheticTruth.load(fixtures_dir / "synthetic_truth.json")
    sample = generate_synthetic_dataset(truth)
    draws = run_joint_mcmc(sample.dataset, Priors(), SamplerConfig(), rng_seed=truth.seed)
    median_sigma = np.median(draws.sigma_paths(), axis=0)
    assert np.mean(np.abs(median_sigma - np.exp(sample.h / 2))) < 0.05
    assert 0.25 <= draws.meta["h_acceptance_mean"] <= 0.50
