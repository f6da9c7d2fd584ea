from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from experiments import (
    compare_draws,
    compare_joint_twostep,
    coverage_study,
    generate_synthetic_dataset,
    lorenz_group_sweep,
    paired_seeds,
    simulate_lorenz_comparison,
    write_synthetic_bundle,
)
from data.loaders import IncomeSchema, load_grouped_csv, load_macro_csv
from models import INEQUALITY_STATE, IrfSpec, SamplerConfig, SyntheticTruth
from sampler import run_joint_mcmc
from stats import gini_from_sigma, static_gls_fit
from utils.errors import DomainError, ValidationError


def test_synthetic_dataset_is_deterministic(small_truth):
    first = generate_synthetic_dataset(small_truth)
    second = generate_synthetic_dataset(small_truth)
    np.testing.assert_array_equal(first.dataset.income.endpoint_matrix, second.dataset.income.endpoint_matrix)
    np.testing.assert_array_equal(first.y, second.y)
    np.testing.assert_array_equal(first.h, first.y[:, 0])
    other = generate_synthetic_dataset(replace(small_truth, seed=8))
    assert not np.array_equal(first.h, other.h)


def test_synthetic_dataset_shapes(small_truth):
    sample = generate_synthetic_dataset(small_truth)
    data = sample.dataset
    assert data.periods == 16
    assert data.variables == [INEQUALITY_STATE, "ssr"]
    assert str(data.dates[0]) == "2002Q1"
    assert np.all(np.diff(data.income.endpoint_matrix, axis=1) > 0)
    np.testing.assert_array_equal(data.income.cum_counts[0], [400, 800, 1200, 1600])
    np.testing.assert_array_equal(sample.mu, 5.0)


def test_noise_free_endpoints_are_exact(small_truth):
    truth = replace(small_truth, noise_free=True)
    sample = generate_synthetic_dataset(truth)
    for t in range(truth.periods):
        fit = static_gls_fit(sample.dataset.income.endpoint_matrix[t], truth.grid, truth.n)
        assert fit.mu == pytest.approx(5.0, abs=1e-8)
        assert fit.h == pytest.approx(sample.h[t], abs=1e-8)


def test_synthetic_truth_rejects_unstable_b(small_truth):
    with pytest.raises(ValidationError):
        replace(small_truth, b_mat=1.1 * np.eye(2))
    with pytest.raises(ValidationError):
        replace(small_truth, sigma_mat=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValidationError):
        replace(small_truth, names=["rgdp", "ssr"])


def test_synthetic_bundle_round_trips_through_loaders(tmp_path, small_truth):
    sample = generate_synthetic_dataset(small_truth)
    paths = write_synthetic_bundle(sample, small_truth, tmp_path)
    assert sorted(p.name for p in paths) == sorted(
        ["income.csv", "schema.json", "macro.csv", "transforms.json", "latent.csv", "truth.json"]
    )
    income = load_grouped_csv(tmp_path / "income.csv", IncomeSchema.load(tmp_path / "schema.json"))
    np.testing.assert_allclose(income.endpoint_matrix, sample.dataset.income.endpoint_matrix, rtol=1e-8)
    macro = load_macro_csv(tmp_path / "macro.csv")
    np.testing.assert_allclose(macro["ssr"].to_numpy(), sample.y[:, 1], rtol=1e-8, atol=1e-12)
    reloaded = SyntheticTruth.load(tmp_path / "truth.json")
    np.testing.assert_array_equal(reloaded.b_mat, small_truth.b_mat)
    latent = pd.read_csv(tmp_path / "latent.csv")
    assert list(latent.columns) == ["date", "mu", "h", "sigma"]


def test_grouped_gini_underestimates_lognormal_gini():
    for seed in range(20):
        report = simulate_lorenz_comparison(sigma=1.0, n_obs=20_000, n_groups=5, seed=seed)
        assert report.true_gini == pytest.approx(gini_from_sigma(1.0))
        assert report.gap > 0


@pytest.mark.slow
def test_grouped_gini_gap_on_large_samples():
    for seed in range(20):
        report = simulate_lorenz_comparison(sigma=1.0, n_obs=100_000, n_groups=5, seed=seed)
        assert report.true_gini == pytest.approx(gini_from_sigma(1.0))
        assert report.gap > 0


def test_lorenz_without_dispersion():
    report = simulate_lorenz_comparison(mu=2.0, sigma=0.0, n_obs=1_000, n_groups=5)
    assert report.true_gini == 0.0
    assert report.grouped_gini == pytest.approx(0.0, abs=1e-12)


def test_lorenz_report_outputs(tmp_path):
    report = simulate_lorenz_comparison(sigma=0.8, n_obs=5_000, n_groups=4, seed=3, curve_points=11)
    curves = report.polylines()
    assert set(curves["curve"]) == {"grouped", "lognormal"}
    assert (curves["curve"] == "grouped").sum() == 5
    assert (curves["curve"] == "lognormal").sum() == 11
    paths = report.write(tmp_path)
    assert [p.name for p in paths] == ["lorenz_report.json", "lorenz_curves.csv"]
    assert report.to_dict()["gap"] == pytest.approx(report.gap)


def test_lorenz_rejects_bad_arguments():
    with pytest.raises(ValidationError):
        simulate_lorenz_comparison(n_obs=100, n_groups=1)
    with pytest.raises(ValidationError):
        simulate_lorenz_comparison(n_obs=3, n_groups=5)
    with pytest.raises(DomainError):
        simulate_lorenz_comparison(sigma=-1.0, n_obs=100)


def test_coarser_grouping_widens_the_gap():
    sweep = lorenz_group_sweep(sigma=1.0, group_counts=(2, 5, 20), seeds=range(5), n_obs=20_000)
    assert len(sweep) == 15
    mean_gap = sweep.groupby("n_groups")["gap"].mean()
    assert mean_gap[2] > mean_gap[5] > mean_gap[20] > 0


def test_paired_seeds_are_distinct_and_stable():
    joint, twostep = paired_seeds(42)
    assert joint != twostep
    assert paired_seeds(42) == (joint, twostep)
    assert paired_seeds(43) != (joint, twostep)


def test_compare_identical_draws_sits_on_diagonal(tmp_path, small_truth, tiny_sampler):
    sample = generate_synthetic_dataset(small_truth)
    draws = run_joint_mcmc(sample.dataset, None, tiny_sampler, 5)
    bundle = compare_draws(draws, draws, IrfSpec("ssr", horizon=8))
    np.testing.assert_array_equal(bundle.scatter.frame["response_a"], bundle.scatter.frame["response_b"])
    assert bundle.scatter.below_share == 0.0
    np.testing.assert_allclose(bundle.widths["width_ratio"].dropna(), 1.0)

    paths = bundle.write(tmp_path, svg=True)
    assert sorted(p.name for p in paths) == sorted(
        [
            "comparison.json",
            "irf_joint.csv",
            "irf_twostep.csv",
            "scatter.csv",
            "band_widths.csv",
            "irf_joint.svg",
            "irf_twostep.svg",
        ]
    )
    assert bundle.summary()["scatter_rows"] == tiny_sampler.draws


def test_compare_joint_twostep_pairs_every_draw(small_truth, tiny_sampler):
    sample = generate_synthetic_dataset(small_truth)
    spec = IrfSpec("ssr", horizon=8, scale=-0.25)
    bundle = compare_joint_twostep(sample.dataset, None, tiny_sampler, spec, seed=11, threads=2)
    assert len(bundle.scatter.frame) == tiny_sampler.draws
    assert bundle.seeds == (11, *paired_seeds(11))
    assert bundle.joint.meta["method"] == "joint"
    assert bundle.twostep.meta["method"] == "twostep"
    assert list(bundle.widths["horizon"]) == list(range(9))


def test_small_coverage_study(small_truth, tiny_sampler):
    report = coverage_study(small_truth, config=tiny_sampler, seeds=[1, 2], threads=2)
    assert len(report.results) == 2
    assert report.entry_coverage.shape == (2, 2)
    assert np.all((report.entry_coverage >= 0) & (report.entry_coverage <= 1))
    assert report.mean_sigma_mae >= 0
    assert report.to_dict()["replications"] == 2
    assert report.to_frame()["seed"].tolist() == [1, 2]


@pytest.mark.slow
def test_joint_bands_at_least_as_wide_on_noisy_data(fixtures_dir):
    truth = SyntheticTruth.load(fixtures_dir / "synthetic_truth.json")
    sample = generate_synthetic_dataset(truth)
    config = SamplerConfig(burn_in=2_000, draws=2_000)
    bundle = compare_joint_twostep(sample.dataset, None, config, IrfSpec("ssr", horizon=12, scale=-0.25), seed=3)
    ratios = bundle.widths.loc[1:8, "width_ratio"]
    assert ratios.mean() >= 0.9


@pytest.mark.slow
def test_noise_free_medians_agree(fixtures_dir):
    truth = replace(SyntheticTruth.load(fixtures_dir / "synthetic_truth.json"), noise_free=True)
    sample = generate_synthetic_dataset(truth)
    config = SamplerConfig(burn_in=2_000, draws=2_000)
    bundle = compare_joint_twostep(sample.dataset, None, config, IrfSpec("ssr", horizon=12, scale=-0.25), seed=4)
    gap = np.abs(bundle.widths["joint_median"] - bundle.widths["twostep_median"])
    assert gap.max() <= 0.5 * bundle.widths["joint_width"].max()


@pytest.mark.slow
def test_coverage_over_hundred_replications(fixtures_dir):
    truth = SyntheticTruth.load(fixtures_dir / "synthetic_truth.json")
    config = SamplerConfig(burn_in=2_000, draws=2_000)
    report = coverage_study(truth, config=config, seeds=range(100), threads=4)
    assert len(report.results) == 100
    assert report.entry_coverage.min() >= 0.85
    assert report.mean_sigma_mae < 0.05
