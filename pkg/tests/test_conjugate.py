"""Tests for the single-component conjugate machinery."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import t as student_t

from mixbandits.conjugate import (ComponentStats, NIGHyper, accumulate,
                                  log_marginal_block, log_predictive,
                                  posterior_update, sample_params)


def default_prior(d=2):
    return NIGHyper.default(d)


def random_prior(rng, d):
    a = rng.standard_normal((d, d))
    V = a @ a.T + d * np.eye(d)
    return NIGHyper(rng.standard_normal(d), V,
                    alpha=0.5 + 2.0 * rng.random(),
                    beta=0.5 + 2.0 * rng.random())


def chained_log_predictive(prior, X, Y):
    """Independent oracle: the block marginal as a product of one-step
    predictives, each conditioning on the previous observations."""
    total = 0.0
    stats = ComponentStats.empty(prior.dim)
    for x, y in zip(X, Y):
        total += log_predictive(posterior_update(prior, stats), x, y)
        stats.add(x, y)
    return total


class TestNIGHyper:
    def test_validation_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            NIGHyper(np.zeros(2), np.eye(2), alpha=-1.0, beta=1.0)
        with pytest.raises(ValueError):
            NIGHyper(np.zeros(2), np.eye(2), alpha=1.0, beta=0.0)
        with pytest.raises(ValueError):
            NIGHyper(np.zeros(2), -np.eye(2), alpha=1.0, beta=1.0)
        with pytest.raises(ValueError):
            NIGHyper(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]),
                     alpha=1.0, beta=1.0)

    def test_precision_identities(self):
        rng = np.random.default_rng(0)
        prior = random_prior(rng, 3)
        assert np.allclose(prior.precision @ prior.V, np.eye(3), atol=1e-10)
        assert np.allclose(prior.precision_mean, prior.precision @ prior.u)
        assert prior.mean_quad == pytest.approx(prior.u @ prior.precision @ prior.u)


class TestAccumulate:
    def test_single_observation_sums(self):
        stats = ComponentStats.empty(2).add([1.0, 1.0], 3.0)
        assert stats.count == 1
        assert np.array_equal(stats.gram, [[1.0, 1.0], [1.0, 1.0]])
        assert np.array_equal(stats.cross, [3.0, 3.0])
        assert stats.energy == 9.0

    def test_add_then_remove_restores(self):
        rng = np.random.default_rng(1)
        stats = ComponentStats.from_data(rng.standard_normal((5, 2)),
                                         rng.standard_normal(5))
        before = stats.copy()
        x, y = rng.standard_normal(2), 0.7
        stats.add(x, y).remove(x, y)
        assert stats.count == before.count
        assert np.allclose(stats.gram, before.gram, rtol=0, atol=1e-12)
        assert np.allclose(stats.cross, before.cross, rtol=0, atol=1e-12)
        assert stats.energy == pytest.approx(before.energy, abs=1e-12)

    def test_incremental_matches_batch(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((10, 3))
        Y = rng.standard_normal(10)
        inc = ComponentStats.empty(3)
        for x, y in zip(X, Y):
            inc.add(x, y)
        batch = ComponentStats.from_data(X, Y)
        assert inc.count == batch.count
        assert np.allclose(inc.gram, batch.gram, rtol=1e-12)
        assert np.allclose(inc.cross, batch.cross, rtol=1e-12)
        assert inc.energy == pytest.approx(batch.energy, rel=1e-12)

    def test_interleaved_adds_and_removes_match_batch(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((8, 2))
        Y = rng.standard_normal(8)
        stats = ComponentStats.empty(2)
        for x, y in zip(X, Y):
            stats.add(x, y)
        # churn: remove and re-add a few observations in odd order
        for i in (5, 1, 6):
            stats.remove(X[i], Y[i])
        for i in (6, 5, 1):
            stats.add(X[i], Y[i])
        batch = ComponentStats.from_data(X, Y)
        assert np.allclose(stats.gram, batch.gram, rtol=1e-10)
        assert np.allclose(stats.cross, batch.cross, rtol=1e-10)
        assert stats.energy == pytest.approx(batch.energy, rel=1e-10)

    def test_remove_from_empty_errors(self):
        with pytest.raises(ValueError):
            ComponentStats.empty(2).remove([1.0, 0.0], 1.0)

    def test_accumulate_function_copies(self):
        stats = ComponentStats.empty(2)
        out = accumulate(stats, [1.0, 0.0], 2.0, "add")
        assert stats.count == 0 and out.count == 1
        back = accumulate(out, [1.0, 0.0], 2.0, "remove")
        assert back.count == 0
        with pytest.raises(ValueError):
            accumulate(stats, [1.0, 0.0], 2.0, "subtract")


class TestPosteriorUpdate:
    def test_empty_stats_returns_prior(self):
        prior = default_prior()
        post = posterior_update(prior, ComponentStats.empty(2))
        assert post is prior

    def test_single_observation_hand_computed(self):
        # one observation x=(1,0), y=2 against the unit prior
        post = posterior_update(default_prior(),
                                ComponentStats.empty(2).add([1.0, 0.0], 2.0))
        assert np.allclose(post.V, np.diag([0.5, 1.0]), atol=1e-14)
        assert np.allclose(post.u, [1.0, 0.0], atol=1e-14)
        assert post.alpha == pytest.approx(1.5)
        assert post.beta == pytest.approx(2.0)

    def test_batch_equals_stepwise_accumulation(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 21))
            prior = random_prior(rng, d)
            X = rng.standard_normal((n, d))
            Y = rng.standard_normal(n)
            stepwise = ComponentStats.empty(d)
            for x, y in zip(X, Y):
                stepwise.add(x, y)
            a = posterior_update(prior, stepwise)
            b = posterior_update(prior, ComponentStats.from_data(X, Y))
            assert np.allclose(a.u, b.u, rtol=1e-10)
            assert np.allclose(a.V, b.V, rtol=1e-10)
            assert a.alpha == pytest.approx(b.alpha, rel=1e-12)
            assert a.beta == pytest.approx(b.beta, rel=1e-10)

    def test_posterior_invariants(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            d = int(rng.integers(1, 4))
            prior = random_prior(rng, d)
            n = int(rng.integers(1, 30))
            X = rng.standard_normal((n, d)) * rng.choice([0.1, 1.0, 5.0])
            Y = rng.standard_normal(n) * rng.choice([0.1, 1.0, 10.0])
            post = posterior_update(prior, ComponentStats.from_data(X, Y))
            assert np.allclose(post.V, post.V.T)
            assert np.all(np.linalg.eigvalsh(post.V) > 0)
            assert post.alpha >= prior.alpha
            assert post.beta > 0

    def test_corrupted_stats_raise(self):
        stats = ComponentStats(3, -10.0 * np.eye(2), np.zeros(2), 1.0)
        with pytest.raises(ValueError):
            posterior_update(default_prior(), stats)


class TestSampleParams:
    def test_coefficient_mean_matches(self):
        rng = np.random.default_rng(6)
        hyper = NIGHyper([1.0, -2.0], 0.5 * np.eye(2), alpha=3.0, beta=2.0)
        draws = np.array([sample_params(hyper, rng).w for _ in range(100_000)])
        # Var(w_i) = (beta/(alpha-1)) * V_ii for the marginal t
        se = np.sqrt(hyper.beta / (hyper.alpha - 1.0) * 0.5 / len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - hyper.u) < 4 * se)

    def test_noise_variance_mean_matches(self):
        rng = np.random.default_rng(7)
        hyper = NIGHyper([0.0], np.eye(1), alpha=3.0, beta=2.0)
        sig = np.array([sample_params(hyper, rng).sigma2
                        for _ in range(100_000)])
        expected = hyper.beta / (hyper.alpha - 1.0)
        se = sig.std(ddof=1) / np.sqrt(len(sig))
        assert abs(sig.mean() - expected) < 4 * se

    def test_degenerate_variance_concentrates(self):
        rng = np.random.default_rng(8)
        hyper = NIGHyper([2.0, -1.0], 1e-16 * np.eye(2), alpha=1e8, beta=1e-8)
        draws = np.array([sample_params(hyper, rng).w for _ in range(100)])
        assert np.allclose(draws, hyper.u, atol=1e-6)


class TestLogPredictive:
    def test_hand_computed_parameterization(self):
        # unit prior at x=(1,1): dof 2, location 0, squared scale 3
        prior = default_prior()
        for y in (-2.0, 0.0, 0.7, 5.0):
            assert log_predictive(prior, [1.0, 1.0], y) == pytest.approx(
                student_t.logpdf(y, df=2, loc=0.0, scale=np.sqrt(3.0)),
                abs=1e-12)

    def test_density_normalizes(self):
        rng = np.random.default_rng(9)
        prior = random_prior(rng, 2)
        x = rng.standard_normal(2)
        total, _ = quad(lambda y: np.exp(log_predictive(prior, x, y)),
                        -np.inf, np.inf)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_matches_monte_carlo_marginalization(self):
        n_draws = 100_000
        for seed in range(5):
            rng = np.random.default_rng(1000 + seed)
            prior = random_prior(rng, 2)
            x = rng.standard_normal(2)
            y = float(x @ prior.u + rng.standard_normal())
            sigma2 = prior.beta / rng.standard_gamma(prior.alpha, n_draws)
            ws = (prior.u[None, :]
                  + np.sqrt(sigma2)[:, None]
                  * (rng.standard_normal((n_draws, 2)) @ prior._chol_V.T))
            dens = np.exp(-0.5 * (y - ws @ x) ** 2 / sigma2) / np.sqrt(
                2 * np.pi * sigma2)
            mc, se = dens.mean(), dens.std(ddof=1) / np.sqrt(n_draws)
            assert abs(np.exp(log_predictive(prior, x, y)) - mc) < 3 * se


class TestLogMarginalBlock:
    def test_empty_block_is_zero(self):
        assert log_marginal_block(default_prior(), np.zeros((0, 2)), []) == 0.0

    def test_single_observation_equals_predictive(self):
        rng = np.random.default_rng(11)
        prior = random_prior(rng, 3)
        x = rng.standard_normal(3)
        y = 0.4
        assert log_marginal_block(prior, x[None, :], [y]) == pytest.approx(
            log_predictive(prior, x, y), abs=1e-10)

    def test_equals_chained_predictives(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 21))
            prior = random_prior(rng, d)
            X = rng.standard_normal((n, d))
            Y = rng.standard_normal(n)
            assert log_marginal_block(prior, X, Y) == pytest.approx(
                chained_log_predictive(prior, X, Y), abs=1e-8)
