"""Per-arm nonparametric mixture state and the warm-started collapsed Gibbs sampler.

An :class:`ArmState` owns one arm's observation history, the assignment of
each observation to a mixture component, and the cached conjugate posterior
of every active component.  Components are integrated out analytically, so
a Gibbs sweep only resamples assignments; the Pitman-Yor prior lets the
number of components grow and shrink with the data.

:class:`FiniteMixtureArmState` is the fixed-size counterpart used by the
oracle baseline policy: the component count is pinned at construction,
empty components stay available, and assignment weights follow a symmetric
Dirichlet prior.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .conjugate import ComponentStats, NIGHyper
from .validation import as_context_vector, as_reward, check_positive_int

__all__ = [
    "PYConfig",
    "GibbsConfig",
    "ObserveDiagnostics",
    "ArmState",
    "FiniteMixtureArmState",
]

_OBS_CAPACITY = 16
_COMP_CAPACITY = 8


@dataclass(frozen=True)
class PYConfig:
    """Pitman-Yor prior parameters: discount in [0, 1), concentration > -discount."""

    discount: float = 0.0
    concentration: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        if not self.concentration > -self.discount:
            raise ValueError(
                f"concentration must exceed -discount, got {self.concentration}")


@dataclass(frozen=True)
class GibbsConfig:
    """Stopping rule for the per-interaction Gibbs sampler.

    Sweeping stops once the relative change of the joint log likelihood
    between consecutive sweeps falls below ``epsilon``, or after
    ``max_iters`` sweeps, whichever comes first.
    """

    epsilon: float = 0.01
    max_iters: int = 10

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        check_positive_int(self.max_iters, "max_iters")


@dataclass(frozen=True)
class ObserveDiagnostics:
    """Sweeps executed while absorbing one observation, and whether the
    log-likelihood stopping rule was met before the iteration cap."""

    sweeps_run: int
    converged: bool


class _MixtureArmBase:
    """Array-backed storage shared by the nonparametric and finite arm states."""

    def __init__(self, context_dim, prior):
        context_dim = check_positive_int(context_dim, "context_dim")
        if prior is None:
            prior = NIGHyper.default(context_dim)
        if prior.dim != context_dim:
            raise ValueError("prior dimension does not match context_dim")
        self.prior = prior
        self._d = context_dim
        self._n = 0
        self._k = 0
        self._xs = np.empty((_OBS_CAPACITY, context_dim))
        self._ys = np.empty(_OBS_CAPACITY)
        self._z = np.empty(_OBS_CAPACITY, dtype=np.int64)
        self._alloc_components(_COMP_CAPACITY)
        # flattened prior, shared with the jitted kernels
        self._u0 = prior.u
        self._v0 = prior.V
        self._prec0 = prior.precision
        self._prec0_u0 = prior.precision_mean
        self._quad0 = prior.mean_quad
        self._alpha0 = prior.alpha
        self._beta0 = prior.beta

    def _alloc_components(self, capacity):
        d = self._d
        self._counts = np.zeros(capacity, dtype=np.int64)
        self._gram = np.zeros((capacity, d, d))
        self._cross = np.zeros((capacity, d))
        self._energy = np.zeros(capacity)
        self._u = np.zeros((capacity, d))
        self._v = np.zeros((capacity, d, d))
        self._alpha = np.zeros(capacity)
        self._beta = np.zeros(capacity)
        self._logw = np.empty(capacity + 1)

    def _ensure_obs_capacity(self, needed):
        cap = self._xs.shape[0]
        if needed <= cap:
            return
        new_cap = max(needed, 2 * cap)
        for name in ("_xs", "_ys", "_z"):
            old = getattr(self, name)
            grown = np.empty((new_cap,) + old.shape[1:], dtype=old.dtype)
            grown[: self._n] = old[: self._n]
            setattr(self, name, grown)

    def _ensure_comp_capacity(self, needed):
        cap = self._counts.shape[0]
        if needed <= cap:
            return
        new_cap = max(needed, 2 * cap)
        live = self._k
        old = (self._counts, self._gram, self._cross, self._energy,
               self._u, self._v, self._alpha, self._beta)
        self._alloc_components(new_cap)
        new = (self._counts, self._gram, self._cross, self._energy,
               self._u, self._v, self._alpha, self._beta)
        for dst, src in zip(new, old):
            dst[:live] = src[:live]

    def _append(self, x, y):
        self._ensure_obs_capacity(self._n + 1)
        self._xs[self._n] = x
        self._ys[self._n] = y
        self._n += 1

    # -- read-only views ------------------------------------------------

    @property
    def context_dim(self):
        return self._d

    @property
    def n(self):
        """Number of observations."""
        return self._n

    @property
    def num_components(self):
        """Number of components carrying state (active blocks, or the fixed size)."""
        return self._k

    @property
    def contexts(self):
        return self._xs[: self._n]

    @property
    def rewards(self):
        return self._ys[: self._n]

    @property
    def assignments(self):
        return self._z[: self._n]

    @property
    def counts(self):
        return self._counts[: self._k]

    def stats(self, k):
        """Copy of component ``k``'s sufficient statistics."""
        self._check_component(k)
        return ComponentStats(int(self._counts[k]), self._gram[k].copy(),
                              self._cross[k].copy(), float(self._energy[k]))

    def posterior(self, k):
        """Component ``k``'s cached NIG posterior."""
        self._check_component(k)
        if self._counts[k] == 0:
            return self.prior
        return NIGHyper(self._u[k].copy(), self._v[k].copy(),
                        float(self._alpha[k]), float(self._beta[k]))

    def _check_component(self, k):
        if not 0 <= k < self._k:
            raise IndexError(f"component {k} out of range [0, {self._k})")

    def _refresh(self, k):
        _kernels.refresh_posterior(k, self._counts, self._gram, self._cross,
                                   self._energy, self._u, self._v,
                                   self._alpha, self._beta, self._u0,
                                   self._v0, self._prec0, self._prec0_u0,
                                   self._quad0, self._alpha0, self._beta0)

    def snapshot(self):
        """Copies of the full mutable state, for equality checks."""
        k, n = self._k, self._n
        return {
            "n": n,
            "num_components": k,
            "contexts": self._xs[:n].copy(),
            "rewards": self._ys[:n].copy(),
            "assignments": self._z[:n].copy(),
            "counts": self._counts[:k].copy(),
            "gram": self._gram[:k].copy(),
            "cross": self._cross[:k].copy(),
            "energy": self._energy[:k].copy(),
            "u": self._u[:k].copy(),
            "V": self._v[:k].copy(),
            "alpha": self._alpha[:k].copy(),
            "beta": self._beta[:k].copy(),
        }

    def _observe_impl(self, x, y, cfg, rng):
        x = as_context_vector(x, self._d)
        y = as_reward(y)
        self._append(x, y)
        self._assign_new(rng)
        ll_prev = self.joint_log_likelihood()
        sweeps = 0
        converged = False
        while sweeps < cfg.max_iters:
            self.gibbs_sweep(rng)
            sweeps += 1
            ll = self.joint_log_likelihood()
            diff = abs(ll - ll_prev)
            if ll_prev != 0.0:
                rel = diff / abs(ll_prev)
            else:
                rel = 0.0 if diff == 0.0 else np.inf
            ll_prev = ll
            if rel < cfg.epsilon:
                converged = True
                break
        return ObserveDiagnostics(sweeps, converged)


class ArmState(_MixtureArmBase):
    """One arm's Pitman-Yor mixture of Gaussian linear regressions.

    Every active component has at least one assigned observation and a
    cached posterior equal to the conjugate update of the prior with its
    statistics.  All mutation happens through :meth:`observe`,
    :meth:`gibbs_sweep` and the constructors; the instance must be owned by
    a single replication.
    """

    def __init__(self, context_dim, py=None, prior=None):
        super().__init__(context_dim, prior)
        self.py = py if py is not None else PYConfig()

    @classmethod
    def from_assignments(cls, X, Y, z, py=None, prior=None):
        """Build a state with a prescribed assignment vector.

        Labels are compacted in order of first appearance; mainly useful for
        tests and for warm-starting from a known partition.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.asarray(Y, dtype=np.float64).ravel()
        z = np.asarray(z, dtype=np.int64).ravel()
        if not (X.shape[0] == Y.shape[0] == z.shape[0]):
            raise ValueError("X, Y and z must have matching lengths")
        state = cls(X.shape[1], py=py, prior=prior)
        state._ensure_obs_capacity(len(Y))
        relabel = {}
        for label in z:
            if int(label) not in relabel:
                relabel[int(label)] = len(relabel)
        state._ensure_comp_capacity(len(relabel) + 1)
        for x, y, label in zip(X, Y, z):
            i = state._n
            state._append(as_context_vector(x, state._d), as_reward(y))
            k = relabel[int(label)]
            if k == state._k:
                state._k += 1
            state._z[i] = k
            _kernels.stats_update(k, state._counts, state._gram, state._cross,
                                  state._energy, state._xs[i], state._ys[i], 1.0)
        for k in range(state._k):
            state._refresh(k)
        return state

    def copy(self):
        clone = ArmState(self._d, py=self.py, prior=self.prior)
        clone._ensure_obs_capacity(self._n)
        clone._ensure_comp_capacity(self._k + 1)
        clone._n = self._n
        clone._k = self._k
        clone._xs[: self._n] = self._xs[: self._n]
        clone._ys[: self._n] = self._ys[: self._n]
        clone._z[: self._n] = self._z[: self._n]
        for name in ("_counts", "_gram", "_cross", "_energy", "_u", "_v",
                     "_alpha", "_beta"):
            getattr(clone, name)[: self._k] = getattr(self, name)[: self._k]
        return clone

    def assignment_log_weights(self, x, y):
        """Unnormalized assignment log weights for a hypothetical ``(x, y)``.

        Entry ``k < K`` is ``log(n_k - discount)`` plus the component's
        Student-t predictive; the final entry is ``log(concentration +
        K * discount)`` plus the prior predictive.  The common
        ``1/(n + concentration)`` factor is omitted, so only differences are
        meaningful; the softmax of the vector sums to one (probability one
        on the new component for an empty arm).
        """
        x = as_context_vector(x, self._d)
        y = as_reward(y)
        out = np.empty(self._k + 1)
        _kernels.py_log_weights(x, y, self._k, self._counts, self._u, self._v,
                                self._alpha, self._beta, self._u0, self._v0,
                                self._alpha0, self._beta0, self.py.discount,
                                self.py.concentration, out)
        return out

    def gibbs_sweep(self, rng):
        """Resample every observation's assignment once, in history order."""
        self._ensure_comp_capacity(self._n + 1)
        self._k = _kernels.py_gibbs_sweep(
            self._n, self._k, self._xs, self._ys, self._z, self._counts,
            self._gram, self._cross, self._energy, self._u, self._v,
            self._alpha, self._beta, self._u0, self._v0, self._prec0,
            self._prec0_u0, self._quad0, self._alpha0, self._beta0,
            self.py.discount, self.py.concentration, self._logw, rng)

    def joint_log_likelihood(self):
        """Joint log probability of the assignments and observed rewards.

        Equals the sum over components of the block marginal likelihood plus
        the exchangeable Pitman-Yor partition log probability; it depends on
        the partition, not on the observation order.
        """
        return float(_kernels.py_joint_log_likelihood(
            self._n, self._k, self._xs, self._ys, self._z, self._u0,
            self._v0, self._prec0, self._prec0_u0, self._quad0, self._alpha0,
            self._beta0, self.py.discount, self.py.concentration))

    def _assign_new(self, rng):
        self._ensure_comp_capacity(self._k + 1)
        self._k = _kernels.py_assign_new(
            self._n - 1, self._k, self._xs, self._ys, self._z, self._counts,
            self._gram, self._cross, self._energy, self._u, self._v,
            self._alpha, self._beta, self._u0, self._v0, self._prec0,
            self._prec0_u0, self._quad0, self._alpha0, self._beta0,
            self.py.discount, self.py.concentration, self._logw, rng)

    def observe(self, x, y, cfg, rng):
        """Absorb one observation: append, assign, then sweep to stability.

        The new point is first placed by a single draw from the assignment
        conditional, then full sweeps run until the joint log likelihood is
        stable within ``cfg.epsilon`` relative change or ``cfg.max_iters`` is
        reached.  Returns diagnostics; mutates only this arm.
        """
        return self._observe_impl(x, y, cfg, rng)


class FiniteMixtureArmState(_MixtureArmBase):
    """Fixed-size mixture arm used by the oracle policy.

    ``n_components`` is pinned at construction; components with no assigned
    observations remain available and fall back to the prior predictive.
    Assignment weights are proportional to ``n_k + concentration / K`` times
    the component predictive.
    """

    def __init__(self, context_dim, n_components, concentration=0.1,
                 prior=None):
        super().__init__(context_dim, prior)
        n_components = check_positive_int(n_components, "n_components")
        if not concentration > 0:
            raise ValueError(
                f"concentration must be positive, got {concentration}")
        self.concentration = float(concentration)
        self._ensure_comp_capacity(n_components)
        self._k = n_components
        for k in range(n_components):
            self._refresh(k)

    def assignment_log_weights(self, x, y):
        """Unnormalized finite-mixture assignment log weights (length ``K``)."""
        x = as_context_vector(x, self._d)
        y = as_reward(y)
        out = np.empty(self._k)
        _kernels.finite_log_weights(x, y, self._k, self._counts, self._u,
                                    self._v, self._alpha, self._beta,
                                    self.concentration, out)
        return out

    def gibbs_sweep(self, rng):
        """Resample every observation's assignment once, in history order."""
        _kernels.finite_gibbs_sweep(
            self._n, self._k, self._xs, self._ys, self._z, self._counts,
            self._gram, self._cross, self._energy, self._u, self._v,
            self._alpha, self._beta, self._u0, self._v0, self._prec0,
            self._prec0_u0, self._quad0, self._alpha0, self._beta0,
            self.concentration, self._logw, rng)

    def joint_log_likelihood(self):
        """Joint log probability under the symmetric-Dirichlet finite mixture."""
        return float(_kernels.finite_joint_log_likelihood(
            self._n, self._k, self._xs, self._ys, self._z, self._u0,
            self._v0, self._prec0, self._prec0_u0, self._quad0, self._alpha0,
            self._beta0, self.concentration))

    def _assign_new(self, rng):
        _kernels.finite_assign_new(
            self._n - 1, self._k, self._xs, self._ys, self._z, self._counts,
            self._gram, self._cross, self._energy, self._u, self._v,
            self._alpha, self._beta, self._u0, self._v0, self._prec0,
            self._prec0_u0, self._quad0, self._alpha0, self._beta0,
            self.concentration, self._logw, rng)

    def observe(self, x, y, cfg, rng):
        """Absorb one observation with the same warm-started sweep schedule."""
        return self._observe_impl(x, y, cfg, rng)
