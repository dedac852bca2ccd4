# tests/test_gibbs_sampler.py

import numpy as np
import pytest
from scipy.stats import norm

from core.diagnostics import effective_sample_size, mcse
from core.errors import ValidationError
from core.gibbs_sampler import (
    GibbsConfig,
    PosteriorDraws,
    UtilitySpec,
    build_design_matrix,
    gibbs_estimate,
    spec_from_economy,
    whitened_gram,
    willingness_to_travel,
)
from core.inference import RelationSet

QUICK = dict(n_iter=60, burn_in=20, n_chains=2)


def _small_problem(seed=0, k=6, n_programs=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(k, n_programs, 2))
    spec = UtilitySpec(X=X, variance_type=np.array([0, 0, 1][:n_programs]), names=("a", "b"))
    relations = [RelationSet.of([(0, 1), (1, 2)]) for _ in range(k // 2)]
    relations += [RelationSet.of([(2, 0)]) for _ in range(k - k // 2)]
    return spec, relations


def test_spec_validation():
    X = np.zeros((2, 2, 1))
    with pytest.raises(ValidationError):
        UtilitySpec(X=np.zeros((2, 2)), variance_type=[0, 0])
    with pytest.raises(ValidationError):
        UtilitySpec(X=np.full((2, 2, 1), np.nan), variance_type=[0, 0])
    with pytest.raises(ValidationError):
        UtilitySpec(X=X, variance_type=[0, 0, 0])
    with pytest.raises(ValidationError):
        UtilitySpec(X=X, variance_type=[1, 1], normalized_type=0)
    with pytest.raises(ValidationError):
        UtilitySpec(X=X, variance_type=[0, 0], names=("a", "b"))
    spec = UtilitySpec(X=X, variance_type=[0, 1])
    assert spec.names == ("beta1",)
    assert spec.free_types == [1]


def test_config_validation():
    with pytest.raises(ValidationError):
        GibbsConfig(n_iter=10, burn_in=10)
    with pytest.raises(ValidationError):
        GibbsConfig(n_iter=10, burn_in=0, thin=0)
    with pytest.raises(ValidationError):
        GibbsConfig(prior_variance=0.0)
    assert GibbsConfig(n_iter=100, burn_in=40, thin=3).n_kept == 20


def test_whitened_gram_scales_by_program_variance():
    X = np.ones((1, 2, 1))
    np.testing.assert_allclose(whitened_gram(X, np.array([1.0, 4.0])), [[1.25]])


def test_sampler_is_reproducible_and_respects_relations():
    spec, relations = _small_problem()
    cfg = GibbsConfig(seed=4, record_utilities=True, **QUICK)
    draws = gibbs_estimate(relations, spec, cfg)
    again = gibbs_estimate(relations, spec, cfg)
    np.testing.assert_array_equal(draws.beta, again.beta)
    assert draws.beta.shape == (2, 40, 2)
    assert draws.sigma2.shape == (2, 40, 2)
    # El tipo normalizado queda en 1.
    assert (draws.sigma2[:, :, 0] == 1.0).all()
    U = draws.utilities
    for i, rel in enumerate(relations):
        for better, worse in rel:
            assert (U[:, :, i, better] > U[:, :, i, worse]).all()


def test_parallel_chains_match_sequential():
    spec, relations = _small_problem(seed=1)
    sequential = gibbs_estimate(relations, spec, GibbsConfig(seed=2, **QUICK))
    parallel = gibbs_estimate(relations, spec, GibbsConfig(seed=2, workers=2, **QUICK))
    np.testing.assert_array_equal(sequential.beta, parallel.beta)


def test_outside_option_column_has_zero_utility():
    spec, _ = _small_problem(k=4, n_programs=2)
    outside = 2
    relations = [RelationSet.of([(0, outside), (outside, 1)])] * 2 + [RelationSet.of([(1, outside)])] * 2
    draws = gibbs_estimate(relations, spec, GibbsConfig(seed=3, record_utilities=True, **QUICK))
    U = draws.utilities
    assert (U[:, :, :2, 0] > 0).all() and (U[:, :, :2, 1] < 0).all()
    assert (U[:, :, 2:, 1] > 0).all()


def test_bad_relations_are_rejected():
    spec, relations = _small_problem()
    with pytest.raises(ValidationError):
        gibbs_estimate(relations[:-1], spec, GibbsConfig(**QUICK))
    with pytest.raises(ValidationError):
        gibbs_estimate(relations[:-1] + [RelationSet.of([(0, 7)])], spec, GibbsConfig(**QUICK))


def test_frame_round_trip_and_summary():
    spec, relations = _small_problem()
    draws = gibbs_estimate(relations, spec, GibbsConfig(seed=5, **QUICK))
    frame = draws.to_frame()
    assert set(frame.columns) == {"chain", "iter", "param", "value"}
    rebuilt = PosteriorDraws.from_frame(frame, draws.names, draws.types)
    np.testing.assert_allclose(rebuilt.beta, draws.beta)
    np.testing.assert_allclose(rebuilt.sigma2, draws.sigma2)
    summary = draws.summary()
    assert summary["names"] == ["a", "b"]
    assert set(summary["sigma2_mean"]) == {"0", "1"}
    assert summary["n_kept"] == 40 and summary["seed"] == 5
    np.testing.assert_allclose(summary["mcse"], mcse(draws.pooled_beta()))
    np.testing.assert_allclose(summary["ess"], effective_sample_size(draws.pooled_beta()))
    assert all(value > 0 for value in summary["mcse"] + summary["ess"])
    with pytest.raises(ValidationError):
        PosteriorDraws.from_frame(frame[frame["param"] != "b"], draws.names, draws.types)


def test_design_matrix_from_economy(lottery_economy):
    economy = lottery_economy([1, 2, 3], n_students=4, covariates={"D": np.array([1, 0, 1, 0])})
    X = build_design_matrix(economy, ("quality", "D*quality"))
    assert X.shape == (4, 3, 2)
    np.testing.assert_allclose(X[0, :, 0], [0.0, 1.0, 2.0])
    np.testing.assert_allclose(X[1, :, 1], 0.0)
    spec = spec_from_economy(economy, ("quality",))
    assert spec.names == ("quality",) and spec.types == [0]
    with pytest.raises(ValidationError):
        build_design_matrix(economy, ("distance",))
    with pytest.raises(ValidationError):
        build_design_matrix(economy, ("unknown",))


def test_willingness_to_travel():
    assert willingness_to_travel([2.0, -0.5], ("quality", "distance"), "quality") == pytest.approx(4.0)
    with pytest.raises(ValidationError):
        willingness_to_travel([2.0, -0.5], ("quality", "distance"), "small")
    with pytest.raises(ValidationError):
        willingness_to_travel([2.0, 0.0], ("quality", "distance"), "quality")


def test_prior_is_recovered_without_information():
    X = np.full((5, 2, 1), 0.01)
    spec = UtilitySpec(X=X, variance_type=[0, 0])
    relations = [RelationSet()] * 5
    draws = gibbs_estimate(relations, spec, GibbsConfig(n_iter=4_500, burn_in=500, n_chains=2, seed=8))
    pooled = draws.pooled_beta()[:, 0]
    assert abs(pooled.mean()) < 4 * mcse(pooled) + 0.1
    assert pooled.var() == pytest.approx(100.0, rel=0.1)


@pytest.mark.slow
def test_binary_probit_matches_grid_posterior():
    rng = np.random.default_rng(21)
    k = 40
    X = rng.normal(size=(k, 2, 1))
    difference = X[:, 0, 0] - X[:, 1, 0]
    prefers_first = rng.random(k) < norm.cdf(difference / np.sqrt(2))
    relations = [RelationSet.of([(0, 1)] if first else [(1, 0)]) for first in prefers_first]
    spec = UtilitySpec(X=X, variance_type=[0, 0])
    draws = gibbs_estimate(relations, spec, GibbsConfig(n_iter=6_000, burn_in=1_000, n_chains=2, seed=9))

    grid = np.linspace(-6, 6, 24_001)
    signs = np.where(prefers_first, 1.0, -1.0)
    log_post = norm.logcdf(np.outer(grid, signs * difference) / np.sqrt(2)).sum(axis=1) - grid ** 2 / 200
    weights = np.exp(log_post - log_post.max())
    expected = float((grid * weights).sum() / weights.sum())

    pooled = draws.pooled_beta()[:, 0]
    tolerance = 4 * float(np.hypot(mcse(draws.beta[0, :, 0]), mcse(draws.beta[1, :, 0])) / 2) + 0.01
    assert abs(pooled.mean() - expected) < tolerance
