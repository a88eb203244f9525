"""Tests for the bandit policies."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chisquare
from scipy.stats import t as student_t

from mixbandits.conjugate import ComponentStats, NIGHyper, posterior_update
from mixbandits.npmix import FiniteMixtureArmState, GibbsConfig
from mixbandits.policies import (Decision, LinearGaussianTS, NonparametricTS,
                                 OracleMixtureTS, PolicyKind, UniformRandom,
                                 _argmax_random_ties,
                                 oracle_assignment_log_weights)

X_PROBE = np.array([0.6, 0.4])


def make_policies():
    return [
        UniformRandom().reset(3, 2),
        LinearGaussianTS().reset(3, 2),
        NonparametricTS().reset(3, 2),
        OracleMixtureTS(2).reset(3, 2),
    ]


class TestSelectionSymmetry:
    @pytest.mark.parametrize("make", [
        lambda: UniformRandom().reset(4, 2),
        lambda: LinearGaussianTS().reset(4, 2),
        lambda: NonparametricTS().reset(4, 2),
        lambda: OracleMixtureTS(2).reset(4, 2),
    ])
    def test_empty_arms_selected_uniformly(self, make):
        policy = make()
        rng = np.random.default_rng(0)
        counts = np.zeros(4)
        for _ in range(10_000):
            counts[policy.select_arm(X_PROBE, rng).arm] += 1
        assert chisquare(counts).pvalue > 0.001

    def test_decision_arm_maximizes_scores(self):
        rng = np.random.default_rng(1)
        for policy in make_policies():
            for _ in range(50):
                decision = policy.select_arm(rng.random(2), rng)
                assert decision.arm == np.argmax(decision.sampled_expected_rewards)
                assert decision.sweeps_run == 0


class TestDegeneratePosteriors:
    def test_tight_high_arm_dominates_linear(self):
        rng = np.random.default_rng(2)
        policy = LinearGaussianTS().reset(2, 2)
        # noiseless consistent data collapses each arm's posterior
        for _ in range(400):
            x = rng.random(2)
            policy.update(0, x, float(x @ [10.0, 10.0]), rng)
            policy.update(1, x, 0.0, rng)
        picks = [policy.select_arm([1.0, 1.0], rng).arm for _ in range(300)]
        assert np.mean(np.array(picks) == 0) > 0.99

    def test_tight_high_arm_dominates_nonparametric(self):
        rng = np.random.default_rng(3)
        policy = NonparametricTS().reset(2, 2)
        for _ in range(150):
            x = rng.random(2)
            policy.update(0, x, float(x @ [10.0, 10.0]), rng)
            policy.update(1, x, 0.0, rng)
        picks = [policy.select_arm([1.0, 1.0], rng).arm for _ in range(200)]
        assert np.mean(np.array(picks) == 0) > 0.95


class TestMixtureWeights:
    def test_nonparametric_weights_sum_to_one(self):
        rng = np.random.default_rng(4)
        policy = NonparametricTS(concentration=0.7, discount=0.3).reset(1, 2)
        for _ in range(40):
            x = rng.random(2)
            policy.update(0, x, rng.standard_normal() + x @ [0.0, 3.0], rng)
        state = policy.arms_[0]
        g, d = state.py.concentration, state.py.discount
        total = state.n + g
        weights = [(c - d) / total for c in state.counts]
        weights.append((g + state.num_components * d) / total)
        assert sum(weights) == pytest.approx(1.0, abs=1e-12)

    def test_oracle_weights_sum_to_one(self):
        rng = np.random.default_rng(5)
        policy = OracleMixtureTS(3, concentration=0.1).reset(1, 2)
        for _ in range(25):
            x = rng.random(2)
            policy.update(0, x, rng.standard_normal(), rng)
        state = policy.arms_[0]
        total = state.n + state.concentration
        conc_k = state.concentration / state.num_components
        weights = [(c + conc_k) / total for c in state.counts]
        assert sum(weights) == pytest.approx(1.0, abs=1e-12)


class TestUpdateSemantics:
    def test_update_touches_only_played_arm(self):
        rng = np.random.default_rng(6)
        policy = NonparametricTS().reset(3, 2)
        for _ in range(10):
            x = rng.random(2)
            policy.update(1, x, rng.standard_normal(), rng)
        before = [state.snapshot() for state in policy.arms_]
        policy.update(1, [0.2, 0.8], 1.5, rng)
        after = [state.snapshot() for state in policy.arms_]
        for arm in (0, 2):
            for key in before[arm]:
                assert np.array_equal(before[arm][key], after[arm][key])
        assert after[1]["n"] == before[1]["n"] + 1

    def test_linear_update_equals_batch_posterior(self):
        rng = np.random.default_rng(7)
        policy = LinearGaussianTS().reset(2, 2)
        X = rng.random((30, 2))
        Y = rng.standard_normal(30) + X @ [1.0, -1.0]
        for x, y in zip(X, Y):
            policy.update(0, x, y, rng)
        batch = posterior_update(policy.prior_,
                                 ComponentStats.from_data(X, Y))
        learned = policy.posteriors_[0]
        assert np.allclose(learned.u, batch.u, rtol=1e-10)
        assert np.allclose(learned.V, batch.V, rtol=1e-10)
        assert learned.alpha == pytest.approx(batch.alpha)
        assert learned.beta == pytest.approx(batch.beta, rel=1e-10)
        # untouched arm stays at the prior
        assert policy.posteriors_[1] is policy.prior_

    def test_nonparametric_diagnostics_respect_budget(self):
        rng = np.random.default_rng(8)
        policy = NonparametricTS(gibbs=GibbsConfig(epsilon=1e-9, max_iters=3))
        policy.reset(2, 2)
        for _ in range(20):
            x = rng.random(2)
            diag = policy.update(0, x, rng.standard_normal(), rng)
            assert 1 <= diag.sweeps_run <= 3

    def test_uniform_update_is_noop(self):
        rng = np.random.default_rng(9)
        policy = UniformRandom().reset(2, 2)
        diag = policy.update(0, [0.1, 0.9], 5.0, rng)
        assert diag.sweeps_run == 0


class TestOracleWeightsOp:
    def test_requires_finite_state(self):
        with pytest.raises(TypeError):
            oracle_assignment_log_weights(object(), X_PROBE, 0.0)

    def test_counts_plus_spread_concentration(self):
        state = FiniteMixtureArmState(2, 2, concentration=0.1)
        w = oracle_assignment_log_weights(state, X_PROBE, 0.3)
        assert w.shape == (2,)
        # empty components tie exactly at log(conc/K) + prior predictive
        assert w[0] == pytest.approx(w[1], abs=1e-12)


class TestArgmaxInvariance:
    def test_constant_shift_preserves_choice(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            values = rng.standard_normal(5)
            values[rng.integers(5)] = values.max()  # occasional exact ties
            seed = int(rng.integers(2**32))
            pick_a = _argmax_random_ties(values, np.random.default_rng(seed))
            pick_b = _argmax_random_ties(values + 7.25,
                                         np.random.default_rng(seed))
            assert pick_a == pick_b

    def test_exact_ties_split_uniformly(self):
        rng = np.random.default_rng(11)
        values = np.array([1.0, 1.0, 0.0])
        picks = np.array([_argmax_random_ties(values, rng)
                          for _ in range(4000)])
        assert abs(np.mean(picks == 0) - 0.5) < 0.05
        assert not np.any(picks == 2)


class TestPosteriorSamplingProbability:
    def test_two_arm_choice_probability_matches_quadrature(self):
        rng = np.random.default_rng(12)
        policy = LinearGaussianTS().reset(2, 2)
        for _ in range(25):
            x = rng.random(2)
            policy.update(0, x, float(x @ [1.0, 1.0]) + rng.standard_normal(),
                          rng)
            policy.update(1, x, float(x @ [1.4, 1.4]) + rng.standard_normal(),
                          rng)
        x = np.array([0.5, 0.5])

        def sampled_mean_dist(post):
            # x @ w is Student-t: dof 2*alpha, loc x@u, scale from V
            scale = np.sqrt((post.beta / post.alpha) * (x @ post.V @ x))
            return 2.0 * post.alpha, float(x @ post.u), scale

        df0, loc0, sc0 = sampled_mean_dist(policy.posteriors_[0])
        df1, loc1, sc1 = sampled_mean_dist(policy.posteriors_[1])
        analytic, _ = quad(
            lambda s: student_t.pdf(s, df1, loc1, sc1)
            * student_t.cdf(s, df0, loc0, sc0), -np.inf, np.inf)

        n = 100_000
        picks = np.array([policy.select_arm(x, rng).arm for _ in range(n)])
        p_hat = np.mean(picks == 1)
        se = np.sqrt(analytic * (1 - analytic) / n)
        assert abs(p_hat - analytic) < 3 * se

    def test_single_component_nonparametric_matches_linear(self):
        # concentration ~ 0 pins the mixture at one component, which must
        # reproduce the closed-form single-model policy distribution
        rng = np.random.default_rng(13)
        np_policy = NonparametricTS(concentration=1e-12).reset(2, 2)
        lg_policy = LinearGaussianTS().reset(2, 2)
        X = rng.random((30, 2))
        Y0 = X @ [1.0, 1.0] + rng.standard_normal(30)
        Y1 = X @ [1.5, 1.5] + rng.standard_normal(30)
        for x, y0, y1 in zip(X, Y0, Y1):
            np_policy.update(0, x, float(y0), rng)
            np_policy.update(1, x, float(y1), rng)
            lg_policy.update(0, x, float(y0), rng)
            lg_policy.update(1, x, float(y1), rng)
        assert all(s.num_components == 1 for s in np_policy.arms_)
        x = np.array([0.5, 0.5])
        n = 20_000
        p_np = np.mean([np_policy.select_arm(x, rng).arm for _ in range(n)])
        p_lg = np.mean([lg_policy.select_arm(x, rng).arm for _ in range(n)])
        se = np.sqrt(p_lg * (1 - p_lg) * 2 / n)
        assert abs(p_np - p_lg) < 3 * se


class TestValidation:
    def test_context_dimension_mismatch_errors(self):
        rng = np.random.default_rng(14)
        for policy in make_policies():
            with pytest.raises(ValueError):
                policy.select_arm([1.0, 2.0, 3.0], rng)
            with pytest.raises(ValueError):
                policy.update(0, [1.0], 0.5, rng)

    def test_arm_out_of_range_errors(self):
        rng = np.random.default_rng(15)
        for policy in make_policies():
            with pytest.raises(IndexError):
                policy.update(3, X_PROBE, 0.5, rng)

    def test_unreset_policy_errors(self):
        with pytest.raises(RuntimeError):
            NonparametricTS().select_arm(X_PROBE, np.random.default_rng(0))

    def test_oracle_needs_matching_counts(self):
        with pytest.raises(ValueError):
            OracleMixtureTS((2, 2)).reset(3, 2)


class TestPolicyKind:
    def test_round_trip(self):
        kind = PolicyKind("oracle", concentration=0.2, oracle_k=(1, 2, 3))
        again = PolicyKind.from_dict(kind.to_dict())
        assert again == kind

    def test_build_all_names(self):
        assert isinstance(PolicyKind("uniform").build(2, 2), UniformRandom)
        assert isinstance(PolicyKind("linear").build(2, 2), LinearGaussianTS)
        assert isinstance(PolicyKind("nonparametric").build(2, 2),
                          NonparametricTS)
        oracle = PolicyKind("oracle", oracle_k=(2, 2)).build(2, 2)
        assert isinstance(oracle, OracleMixtureTS)

    def test_rejects_unknown_name_and_bad_knobs(self):
        with pytest.raises(ValueError):
            PolicyKind("ucb")
        with pytest.raises(ValueError):
            PolicyKind("nonparametric", discount=1.5)
        with pytest.raises(ValueError):
            PolicyKind("nonparametric", gibbs_max=0)
        with pytest.raises(ValueError):
            PolicyKind("oracle").build(2, 2)

    def test_get_params_reports_hyperparameters(self):
        params = NonparametricTS(concentration=0.3).get_params()
        assert params["concentration"] == 0.3
        assert "discount" in params
