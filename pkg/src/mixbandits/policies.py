"""Bandit policies behind a single select/update interface.

All policies follow the same discipline: hyperparameters go to the
constructor (and are reported by ``get_params``), per-run state is built by
``reset(n_arms, context_dim)``, and the interaction loop alternates
``select_arm`` and ``update``.  A policy instance is a single-owner state
machine; run one instance per replication.

``NonparametricTS`` is Thompson sampling over per-arm Pitman-Yor mixtures
of Gaussian linear regressions.  ``OracleMixtureTS`` is the matched
baseline that is told the true number of components per arm.
``LinearGaussianTS`` is the closed-form single-component conjugate policy,
and ``UniformRandom`` ignores everything.
"""

from dataclasses import dataclass, field

import numpy as np

from .conjugate import ComponentStats, NIGHyper, posterior_update, sample_params
from .npmix import (ArmState, FiniteMixtureArmState, GibbsConfig,
                    ObserveDiagnostics, PYConfig)
from .validation import as_context_vector, as_reward, check_positive_int

__all__ = [
    "Decision",
    "BanditPolicy",
    "NonparametricTS",
    "OracleMixtureTS",
    "LinearGaussianTS",
    "UniformRandom",
    "oracle_assignment_log_weights",
    "PolicyKind",
    "POLICY_NAMES",
]

_NO_SWEEPS = ObserveDiagnostics(sweeps_run=0, converged=True)


@dataclass(frozen=True)
class Decision:
    """Outcome of one arm selection.

    ``arm`` maximizes ``sampled_expected_rewards`` (exact ties broken
    uniformly at random).  ``sweeps_run`` is zero here for every policy;
    Gibbs sweeps happen on update and are reported by its diagnostics.
    """

    arm: int
    sampled_expected_rewards: np.ndarray
    sweeps_run: int = 0


def _argmax_random_ties(values, rng):
    best = np.max(values)
    winners = np.flatnonzero(values == best)
    if winners.size == 1:
        return int(winners[0])
    return int(rng.choice(winners))


class BanditPolicy:
    """Interface shared by all policies."""

    def reset(self, n_arms, context_dim):
        raise NotImplementedError

    def select_arm(self, x, rng):
        raise NotImplementedError

    def update(self, arm, x, y, rng):
        raise NotImplementedError

    def get_params(self):
        return {}

    def _require_reset(self):
        if getattr(self, "n_arms", 0) < 1:
            raise RuntimeError("policy must be reset(n_arms, context_dim) first")

    def _check_arm(self, arm):
        if not 0 <= arm < self.n_arms:
            raise IndexError(f"arm {arm} out of range [0, {self.n_arms})")


class UniformRandom(BanditPolicy):
    """Plays arms uniformly at random, ignoring context and rewards."""

    def reset(self, n_arms, context_dim):
        self.n_arms = check_positive_int(n_arms, "n_arms")
        self.context_dim = check_positive_int(context_dim, "context_dim")
        return self

    def select_arm(self, x, rng):
        self._require_reset()
        as_context_vector(x, self.context_dim)
        # i.i.d. scores make the argmax uniform while keeping the Decision
        # invariant (chosen arm maximizes the reported vector)
        scores = rng.random(self.n_arms)
        return Decision(_argmax_random_ties(scores, rng), scores)

    def update(self, arm, x, y, rng):
        self._require_reset()
        self._check_arm(arm)
        as_context_vector(x, self.context_dim)
        as_reward(y)
        return _NO_SWEEPS

    def get_params(self):
        return {}


class LinearGaussianTS(BanditPolicy):
    """Thompson sampling with one conjugate Gaussian linear model per arm."""

    def __init__(self, prior=None):
        self.prior = prior

    def reset(self, n_arms, context_dim):
        self.n_arms = check_positive_int(n_arms, "n_arms")
        self.context_dim = check_positive_int(context_dim, "context_dim")
        prior = self.prior if self.prior is not None else NIGHyper.default(context_dim)
        if prior.dim != context_dim:
            raise ValueError("prior dimension does not match context_dim")
        self.prior_ = prior
        self.stats_ = [ComponentStats.empty(context_dim) for _ in range(n_arms)]
        self.posteriors_ = [prior] * n_arms
        return self

    def select_arm(self, x, rng):
        self._require_reset()
        x = as_context_vector(x, self.context_dim)
        mus = np.empty(self.n_arms)
        for a in range(self.n_arms):
            mus[a] = x @ sample_params(self.posteriors_[a], rng).w
        return Decision(_argmax_random_ties(mus, rng), mus)

    def update(self, arm, x, y, rng):
        self._require_reset()
        self._check_arm(arm)
        x = as_context_vector(x, self.context_dim)
        self.stats_[arm].add(x, as_reward(y))
        self.posteriors_[arm] = posterior_update(self.prior_, self.stats_[arm])
        return _NO_SWEEPS

    def get_params(self):
        return {"prior": self.prior}


class NonparametricTS(BanditPolicy):
    """Thompson sampling over per-arm Pitman-Yor Gaussian-mixture rewards.

    At selection time each arm draws regression coefficients for every
    active component from its posterior, plus one draw from the prior for
    the potential new component, and scores the arm with the weighted
    mixture mean; the weights are the Pitman-Yor predictive proportions.
    On update, only the played arm absorbs the reward through its
    warm-started Gibbs sampler.
    """

    def __init__(self, concentration=0.1, discount=0.0, gibbs=None,
                 prior=None):
        self.concentration = concentration
        self.discount = discount
        self.gibbs = gibbs
        self.prior = prior

    def reset(self, n_arms, context_dim):
        self.n_arms = check_positive_int(n_arms, "n_arms")
        self.context_dim = check_positive_int(context_dim, "context_dim")
        prior = self.prior if self.prior is not None else NIGHyper.default(context_dim)
        py = PYConfig(discount=self.discount, concentration=self.concentration)
        self.gibbs_ = self.gibbs if self.gibbs is not None else GibbsConfig()
        self.prior_ = prior
        self.arms_ = [ArmState(context_dim, py=py, prior=prior)
                      for _ in range(n_arms)]
        return self

    def _sampled_mean(self, state, x, rng):
        w_k = [sample_params(state.posterior(k), rng).w
               for k in range(state.num_components)]
        w_new = sample_params(self.prior_, rng).w
        if state.n == 0:
            return float(x @ w_new)
        d, g = state.py.discount, state.py.concentration
        total = state.n + g
        mu = ((g + state.num_components * d) / total) * (x @ w_new)
        for k, w in enumerate(w_k):
            mu += ((state.counts[k] - d) / total) * (x @ w)
        return float(mu)

    def select_arm(self, x, rng):
        self._require_reset()
        x = as_context_vector(x, self.context_dim)
        mus = np.array([self._sampled_mean(state, x, rng)
                        for state in self.arms_])
        return Decision(_argmax_random_ties(mus, rng), mus)

    def update(self, arm, x, y, rng):
        self._require_reset()
        self._check_arm(arm)
        return self.arms_[arm].observe(x, y, self.gibbs_, rng)

    def get_params(self):
        return {"concentration": self.concentration, "discount": self.discount,
                "gibbs": self.gibbs, "prior": self.prior}


class OracleMixtureTS(BanditPolicy):
    """Thompson sampling with the true per-arm component count.

    Each arm runs the same collapsed Gibbs machinery as the nonparametric
    policy, but over a fixed number of components with a symmetric
    Dirichlet(concentration / K) prior; empty components stay available.
    """

    def __init__(self, n_components, concentration=0.1, gibbs=None,
                 prior=None):
        self.n_components = n_components
        self.concentration = concentration
        self.gibbs = gibbs
        self.prior = prior

    def reset(self, n_arms, context_dim):
        self.n_arms = check_positive_int(n_arms, "n_arms")
        self.context_dim = check_positive_int(context_dim, "context_dim")
        if isinstance(self.n_components, int):
            per_arm = [self.n_components] * n_arms
        else:
            per_arm = [int(k) for k in self.n_components]
        if len(per_arm) != n_arms:
            raise ValueError(
                f"n_components must give one entry per arm ({n_arms}), "
                f"got {len(per_arm)}")
        prior = self.prior if self.prior is not None else NIGHyper.default(context_dim)
        self.gibbs_ = self.gibbs if self.gibbs is not None else GibbsConfig()
        self.prior_ = prior
        self.arms_ = [FiniteMixtureArmState(context_dim, k,
                                            concentration=self.concentration,
                                            prior=prior)
                      for k in per_arm]
        return self

    def _sampled_mean(self, state, x, rng):
        g = state.concentration
        total = state.n + g
        conc_k = g / state.num_components
        mu = 0.0
        for k in range(state.num_components):
            w = sample_params(state.posterior(k), rng).w
            mu += ((state.counts[k] + conc_k) / total) * (x @ w)
        return float(mu)

    def select_arm(self, x, rng):
        self._require_reset()
        x = as_context_vector(x, self.context_dim)
        mus = np.array([self._sampled_mean(state, x, rng)
                        for state in self.arms_])
        return Decision(_argmax_random_ties(mus, rng), mus)

    def update(self, arm, x, y, rng):
        self._require_reset()
        self._check_arm(arm)
        return self.arms_[arm].observe(x, y, self.gibbs_, rng)

    def get_params(self):
        return {"n_components": self.n_components,
                "concentration": self.concentration, "gibbs": self.gibbs,
                "prior": self.prior}


def oracle_assignment_log_weights(state, x, y):
    """Finite-mixture assignment log weights for an oracle arm state.

    Entry ``k`` is ``log(n_k + concentration / K)`` plus the predictive
    under component ``k``'s posterior; never prunes empty components.
    """
    if not isinstance(state, FiniteMixtureArmState):
        raise TypeError("expected a FiniteMixtureArmState")
    return state.assignment_log_weights(x, y)


POLICY_NAMES = ("nonparametric", "oracle", "linear", "uniform")


@dataclass(frozen=True)
class PolicyKind:
    """Serializable description of a policy, used by the harness and CLI.

    ``oracle_k`` gives the oracle's per-arm component counts; the harness
    fills it from the scenario's true structure when left unset.  Prior
    knobs build ``NIGHyper(0, prior_scale * I, prior_alpha, prior_beta)``.
    """

    name: str
    concentration: float = 0.1
    discount: float = 0.0
    gibbs_eps: float = 0.01
    gibbs_max: int = 10
    oracle_k: tuple = None
    prior_alpha: float = 1.0
    prior_beta: float = 1.0
    prior_scale: float = 1.0

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(
                f"unknown policy {self.name!r}; valid names: "
                + ", ".join(POLICY_NAMES))
        if self.oracle_k is not None:
            object.__setattr__(self, "oracle_k",
                               tuple(int(k) for k in self.oracle_k))
        # fail fast on out-of-range knobs instead of deep inside a run
        if self.name == "nonparametric":
            PYConfig(discount=self.discount, concentration=self.concentration)
        if self.name == "oracle" and not self.concentration > 0:
            raise ValueError("oracle concentration must be positive")
        if self.name in ("nonparametric", "oracle"):
            GibbsConfig(epsilon=self.gibbs_eps, max_iters=self.gibbs_max)

    def build(self, n_arms, context_dim):
        """Instantiate and reset the described policy."""
        prior = NIGHyper.default(context_dim, alpha=self.prior_alpha,
                                 beta=self.prior_beta, scale=self.prior_scale)
        gibbs = GibbsConfig(epsilon=self.gibbs_eps, max_iters=self.gibbs_max)
        if self.name == "uniform":
            policy = UniformRandom()
        elif self.name == "linear":
            policy = LinearGaussianTS(prior=prior)
        elif self.name == "nonparametric":
            policy = NonparametricTS(concentration=self.concentration,
                                     discount=self.discount, gibbs=gibbs,
                                     prior=prior)
        else:
            if self.oracle_k is None:
                raise ValueError("oracle policy needs per-arm component counts")
            policy = OracleMixtureTS(self.oracle_k,
                                     concentration=self.concentration,
                                     gibbs=gibbs, prior=prior)
        return policy.reset(n_arms, context_dim)

    def to_dict(self):
        out = {"name": self.name}
        if self.name in ("nonparametric", "oracle"):
            out.update(concentration=self.concentration,
                       gibbs_eps=self.gibbs_eps, gibbs_max=self.gibbs_max)
        if self.name == "nonparametric":
            out["discount"] = self.discount
        if self.name == "oracle":
            out["oracle_k"] = list(self.oracle_k) if self.oracle_k else None
        if self.name != "uniform":
            out.update(prior_alpha=self.prior_alpha,
                       prior_beta=self.prior_beta,
                       prior_scale=self.prior_scale)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "oracle_k" in data and data["oracle_k"] is not None:
            data["oracle_k"] = tuple(data["oracle_k"])
        return cls(**data)
