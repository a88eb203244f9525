"""Conjugate Bayesian machinery for one Gaussian linear-regression component.

A component models rewards as ``y ~ Normal(x^T w, sigma2)`` with a
Normal-inverse-Gamma prior on ``(w, sigma2)``.  This module provides the
posterior hyperparameter update from accumulated sufficient statistics,
posterior parameter sampling, the Student-t one-step predictive, and the
multivariate-t marginal likelihood of a block of observations.

Posterior updates always recompute from sufficient statistics (never by
downdating a factorization), which keeps repeated add/remove cycles during
Gibbs reassignment numerically stable.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import multivariate_t

from . import _kernels
from .validation import as_context_vector, as_reward, check_positive

__all__ = [
    "NIGHyper",
    "ComponentStats",
    "GaussianLinearParams",
    "posterior_update",
    "accumulate",
    "sample_params",
    "log_predictive",
    "log_marginal_block",
]


@dataclass(frozen=True, eq=False)
class NIGHyper:
    """Normal-inverse-Gamma hyperparameters ``(u, V, alpha, beta)``.

    ``u`` is the coefficient mean, ``V`` the (symmetric positive definite)
    coefficient covariance shape, and ``alpha``/``beta`` the inverse-gamma
    shape/scale of the noise variance.  Instances are immutable; updates
    produce new instances.
    """

    u: np.ndarray
    V: np.ndarray
    alpha: float
    beta: float

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        V = np.ascontiguousarray(self.V, dtype=np.float64)
        if u.ndim != 1:
            raise ValueError("u must be a vector")
        d = u.shape[0]
        if V.shape != (d, d):
            raise ValueError(f"V must have shape ({d}, {d}), got {V.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(V))):
            raise ValueError("hyperparameters contain non-finite entries")
        if not np.allclose(V, V.T, rtol=1e-10, atol=1e-12):
            raise ValueError("V must be symmetric")
        check_positive(self.alpha, "alpha")
        check_positive(self.beta, "beta")
        try:
            chol = np.linalg.cholesky(V)
        except np.linalg.LinAlgError:
            raise ValueError("V must be positive definite") from None
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "_chol_V", chol)
        object.__setattr__(self, "_precision", None)

    @classmethod
    def default(cls, dim, alpha=1.0, beta=1.0, scale=1.0):
        """Weakly informative prior: zero mean, ``scale * I`` covariance shape."""
        return cls(np.zeros(dim), np.eye(dim) * float(scale), alpha, beta)

    @property
    def dim(self):
        return self.u.shape[0]

    @property
    def precision(self):
        """``V^{-1}``, computed lazily from the Cholesky factor."""
        if self._precision is None:
            eye = np.eye(self.dim)
            vinv = np.linalg.solve(self._chol_V.T,
                                   np.linalg.solve(self._chol_V, eye))
            vinv = 0.5 * (vinv + vinv.T)
            object.__setattr__(self, "_precision", vinv)
        return self._precision

    @property
    def precision_mean(self):
        """``V^{-1} u``."""
        return self.precision @ self.u

    @property
    def mean_quad(self):
        """``u^T V^{-1} u``."""
        return float(self.u @ self.precision_mean)


@dataclass
class ComponentStats:
    """Sufficient statistics of the observations assigned to one component.

    Tracks the count, the Gram matrix ``sum x x^T``, the cross moment
    ``sum x y`` and the reward energy ``sum y^2``; together with a prior
    these determine the component posterior exactly.
    """

    count: int
    gram: np.ndarray
    cross: np.ndarray
    energy: float

    @classmethod
    def empty(cls, dim):
        return cls(0, np.zeros((dim, dim)), np.zeros(dim), 0.0)

    @classmethod
    def from_data(cls, X, Y):
        """Batch construction from rows of ``X`` and matching rewards ``Y``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.asarray(Y, dtype=np.float64).ravel()
        if X.shape[0] != Y.shape[0]:
            raise ValueError("X and Y must have one row/entry per observation")
        return cls(len(Y), X.T @ X, X.T @ Y, float(Y @ Y))

    @property
    def dim(self):
        return self.cross.shape[0]

    def add(self, x, y):
        """Accumulate one observation in place."""
        x = as_context_vector(x, self.dim)
        y = as_reward(y)
        self.gram += np.outer(x, x)
        self.cross += x * y
        self.energy += y * y
        self.count += 1
        return self

    def remove(self, x, y):
        """Back out a previously added observation; errors on an empty component."""
        if self.count < 1:
            raise ValueError("cannot remove an observation from empty statistics")
        x = as_context_vector(x, self.dim)
        y = as_reward(y)
        self.gram -= np.outer(x, x)
        self.cross -= x * y
        self.energy -= y * y
        self.count -= 1
        return self

    def copy(self):
        return ComponentStats(self.count, self.gram.copy(), self.cross.copy(),
                              self.energy)


@dataclass(frozen=True)
class GaussianLinearParams:
    """One draw of regression coefficients and noise variance."""

    w: np.ndarray
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "w",
                           np.ascontiguousarray(self.w, dtype=np.float64))
        check_positive(self.sigma2, "sigma2")


def accumulate(stats, x, y, direction="add"):
    """Return a copy of ``stats`` with ``(x, y)`` added or removed."""
    out = stats.copy()
    if direction == "add":
        out.add(x, y)
    elif direction == "remove":
        out.remove(x, y)
    else:
        raise ValueError(f"direction must be 'add' or 'remove', got {direction!r}")
    return out


def posterior_update(prior, stats):
    """Exact NIG posterior from ``prior`` and accumulated ``stats``.

    Implements the conjugate update: posterior precision is the Gram matrix
    plus the prior precision, the mean solves the normal equations against
    the cross moment, the inverse-gamma shape grows by half the count, and
    the scale absorbs the residual reward energy.  Raises ValueError when the
    accumulated precision is not positive definite or the scale collapses to
    a non-positive value (both signal numerically corrupted statistics).
    """
    if stats.dim != prior.dim:
        raise ValueError("prior and statistics dimensions differ")
    if stats.count < 0:
        raise ValueError("statistics count must be non-negative")
    if stats.count == 0:
        return prior
    d = prior.dim
    u = np.empty(d)
    V = np.empty((d, d))
    alpha, beta = _kernels.nig_posterior(
        np.ascontiguousarray(stats.gram), np.ascontiguousarray(stats.cross),
        float(stats.energy), int(stats.count),
        prior.u, prior.V, prior.precision, prior.precision_mean,
        prior.mean_quad, prior.alpha, prior.beta, u, V)
    return NIGHyper(u, V, alpha, beta)


def sample_params(hyper, rng):
    """Draw ``(w, sigma2)`` from the NIG distribution ``hyper``.

    ``sigma2`` is inverse-gamma(alpha, beta) and ``w`` is multivariate normal
    with mean ``u`` and covariance ``sigma2 * V``.
    """
    sigma2 = hyper.beta / rng.standard_gamma(hyper.alpha)
    w = hyper.u + np.sqrt(sigma2) * (hyper._chol_V @ rng.standard_normal(hyper.dim))
    return GaussianLinearParams(w, sigma2)


def log_predictive(hyper, x, y):
    """Student-t log predictive density of reward ``y`` at context ``x``.

    The predictive has ``2 alpha`` degrees of freedom, location ``x^T u`` and
    squared scale ``(beta / alpha) (1 + x^T V x)``.
    """
    x = as_context_vector(x, hyper.dim)
    return float(_kernels.nig_log_predictive(hyper.u, hyper.V, hyper.alpha,
                                             hyper.beta, x, as_reward(y)))


def log_marginal_block(prior, X, Y):
    """Marginal log likelihood of a block of observations under ``prior``.

    ``X`` holds one observation per row.  The block marginal is the
    multivariate-t density with ``2 alpha`` degrees of freedom, location
    ``X u`` and shape ``(beta / alpha) (I + X V X^T)``; an empty block has
    log likelihood zero.
    """
    Y = np.asarray(Y, dtype=np.float64).ravel()
    if Y.size == 0:
        return 0.0
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X must have one row per observation in Y")
    if X.shape[1] != prior.dim:
        raise ValueError("context dimension does not match the prior")
    loc = X @ prior.u
    shape = (prior.beta / prior.alpha) * (np.eye(len(Y)) + X @ prior.V @ X.T)
    return float(multivariate_t.logpdf(Y, loc=loc, shape=shape,
                                       df=2.0 * prior.alpha))
