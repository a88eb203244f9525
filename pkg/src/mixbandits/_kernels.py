"""Jitted numerical core shared by the conjugate and mixture-state layers.

Everything here operates on flat ``float64``/``int64`` arrays so that the
public wrappers in :mod:`mixbandits.conjugate` and :mod:`mixbandits.npmix`
and the tight per-interaction Gibbs loops run through a single
implementation of the math.

Component state is stored as parallel arrays indexed by a compact label
``k in [0, K)``:

    counts  (cap,)        observations assigned to each component
    gram    (cap, d, d)   sum of x x^T over assigned observations
    cross   (cap, d)      sum of x * y
    energy  (cap,)        sum of y^2
    u       (cap, d)      cached posterior coefficient mean
    V       (cap, d, d)   cached posterior coefficient covariance shape
    alpha   (cap,)        cached posterior inverse-gamma shape
    beta    (cap,)        cached posterior inverse-gamma scale

The caches always satisfy ``(u, V, alpha, beta)[k] == posterior(prior,
stats[k])``; every mutating routine below re-establishes that invariant
before returning.  Random draws consume the ``numpy.random.Generator``
passed in by the caller, so one generator per replication yields a fully
deterministic stream across the Python/JIT boundary.
"""

import math

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def _cholesky(a, lower):
    """Lower Cholesky factor of symmetric ``a`` into ``lower``.

    Returns False instead of raising when ``a`` is not positive definite.
    """
    d = a.shape[0]
    for i in range(d):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= lower[i, k] * lower[j, k]
            if i == j:
                if s <= 0.0:
                    return False
                lower[i, i] = math.sqrt(s)
            else:
                lower[i, j] = s / lower[j, j]
        for j in range(i + 1, d):
            lower[i, j] = 0.0
    return True


@njit(cache=True)
def _chol_solve(lower, b):
    """Solve (L L^T) x = b in place, overwriting ``b`` with ``x``."""
    d = lower.shape[0]
    for i in range(d):
        s = b[i]
        for k in range(i):
            s -= lower[i, k] * b[k]
        b[i] = s / lower[i, i]
    for i in range(d - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, d):
            s -= lower[k, i] * b[k]
        b[i] = s / lower[i, i]


@njit(cache=True)
def _chol_inverse(lower, out):
    """Invert (L L^T) into ``out``, symmetrized exactly."""
    d = lower.shape[0]
    col = np.empty(d)
    for j in range(d):
        for i in range(d):
            col[i] = 1.0 if i == j else 0.0
        _chol_solve(lower, col)
        for i in range(d):
            out[i, j] = col[i]
    for i in range(d):
        for j in range(i):
            v = 0.5 * (out[i, j] + out[j, i])
            out[i, j] = v
            out[j, i] = v


@njit(cache=True)
def t_logpdf(nu, m, r2, y):
    """Log density of a Student-t with dof ``nu``, location ``m``, squared scale ``r2``."""
    z = y - m
    return (
        math.lgamma(0.5 * (nu + 1.0))
        - math.lgamma(0.5 * nu)
        - 0.5 * math.log(nu * math.pi * r2)
        - 0.5 * (nu + 1.0) * math.log1p(z * z / (nu * r2))
    )


@njit(cache=True)
def nig_posterior(gram_k, cross_k, energy_k, count, u0, v0, prec0, prec0_u0,
                  quad0, alpha0, beta0, u_out, v_out):
    """Posterior NIG hyperparameters from a prior and accumulated statistics.

    Writes the posterior coefficient mean/covariance into ``u_out``/``v_out``
    and returns ``(alpha, beta)``.  ``prec0 = V0^{-1}``, ``prec0_u0 =
    V0^{-1} u0`` and ``quad0 = u0^T V0^{-1} u0`` are precomputed by the
    caller.  The empty-statistics case returns the prior unchanged.
    """
    d = u0.shape[0]
    if count == 0:
        for i in range(d):
            u_out[i] = u0[i]
            for j in range(d):
                v_out[i, j] = v0[i, j]
        return alpha0, beta0
    prec = np.empty((d, d))
    lower = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            prec[i, j] = gram_k[i, j] + prec0[i, j]
    if not _cholesky(prec, lower):
        raise ValueError("accumulated precision matrix is not positive definite")
    b = np.empty(d)
    for i in range(d):
        b[i] = cross_k[i] + prec0_u0[i]
        u_out[i] = b[i]
    _chol_solve(lower, u_out)
    u_dot_b = 0.0
    for i in range(d):
        u_dot_b += u_out[i] * b[i]
    alpha = alpha0 + 0.5 * count
    beta = beta0 + 0.5 * (energy_k + quad0 - u_dot_b)
    if beta <= 0.0:
        raise ValueError("posterior inverse-gamma scale is not positive")
    _chol_inverse(lower, v_out)
    return alpha, beta


@njit(cache=True)
def nig_log_predictive(u_k, v_k, alpha_k, beta_k, x, y):
    """Student-t predictive log density of reward ``y`` at context ``x``."""
    d = x.shape[0]
    m = 0.0
    q = 0.0
    for i in range(d):
        m += x[i] * u_k[i]
        s = 0.0
        for j in range(d):
            s += v_k[i, j] * x[j]
        q += x[i] * s
    nu = 2.0 * alpha_k
    r2 = (beta_k / alpha_k) * (1.0 + q)
    return t_logpdf(nu, m, r2, y)


@njit(cache=True)
def stats_update(k, counts, gram, cross, energy, x, y, sign):
    """Add (+1.0) or remove (-1.0) one observation from component ``k``."""
    d = x.shape[0]
    for i in range(d):
        xi = x[i]
        cross[k, i] += sign * xi * y
        for j in range(d):
            gram[k, i, j] += sign * xi * x[j]
    energy[k] += sign * y * y
    counts[k] += 1 if sign > 0.0 else -1


@njit(cache=True)
def refresh_posterior(k, counts, gram, cross, energy, u, v, alpha, beta,
                      u0, v0, prec0, prec0_u0, quad0, alpha0, beta0):
    """Recompute the cached posterior of component ``k`` from its statistics."""
    a, b = nig_posterior(gram[k], cross[k], energy[k], counts[k],
                         u0, v0, prec0, prec0_u0, quad0, alpha0, beta0,
                         u[k], v[k])
    alpha[k] = a
    beta[k] = b


@njit(cache=True)
def py_log_weights(x, y, n_active, counts, u, v, alpha, beta,
                   u0, v0, alpha0, beta0, discount, conc, logw):
    """Unnormalized Pitman-Yor assignment log weights into ``logw[:K+1]``.

    Entry ``k < K`` carries ``log(n_k - d)`` plus the posterior predictive;
    entry ``K`` carries ``log(conc + K d)`` plus the prior predictive.  The
    common ``1/(n + conc)`` normalizer is omitted.  The very first customer
    (``K == 0``) opens a new component with probability one, so its entry is
    the bare prior predictive.
    """
    for k in range(n_active):
        logw[k] = math.log(counts[k] - discount) + nig_log_predictive(
            u[k], v[k], alpha[k], beta[k], x, y)
    w_new = conc + n_active * discount
    if n_active == 0:
        logw[0] = nig_log_predictive(u0, v0, alpha0, beta0, x, y)
    elif w_new > 0.0:
        logw[n_active] = math.log(w_new) + nig_log_predictive(
            u0, v0, alpha0, beta0, x, y)
    else:
        logw[n_active] = NEG_INF


@njit(cache=True)
def finite_log_weights(x, y, n_components, counts, u, v, alpha, beta,
                       conc, logw):
    """Unnormalized finite-mixture assignment log weights into ``logw[:K]``.

    Entry ``k`` carries ``log(n_k + conc/K)`` plus the predictive under the
    component's posterior (the prior, for still-empty components).
    """
    conc_k = conc / n_components
    for k in range(n_components):
        logw[k] = math.log(counts[k] + conc_k) + nig_log_predictive(
            u[k], v[k], alpha[k], beta[k], x, y)


@njit(cache=True)
def sample_from_log_weights(logw, m, rng):
    """Draw an index in ``[0, m)`` proportional to ``exp(logw)``.

    Destroys the scratch content of ``logw[:m]``.  If every weight is zero
    (all entries ``-inf``, reachable only for the lone new-component entry
    under a zero-concentration prior) the last entry is returned.
    """
    best = logw[0]
    for i in range(1, m):
        if logw[i] > best:
            best = logw[i]
    if best == NEG_INF:
        return m - 1
    total = 0.0
    for i in range(m):
        p = math.exp(logw[i] - best)
        logw[i] = p
        total += p
    r = rng.random() * total
    acc = 0.0
    for i in range(m):
        acc += logw[i]
        if r <= acc:
            return i
    return m - 1


@njit(cache=True)
def _copy_component(dst, src, counts, gram, cross, energy, u, v, alpha, beta):
    d = cross.shape[1]
    counts[dst] = counts[src]
    energy[dst] = energy[src]
    alpha[dst] = alpha[src]
    beta[dst] = beta[src]
    for i in range(d):
        cross[dst, i] = cross[src, i]
        u[dst, i] = u[src, i]
        for j in range(d):
            gram[dst, i, j] = gram[src, i, j]
            v[dst, i, j] = v[src, i, j]


@njit(cache=True)
def _clear_component(k, counts, gram, cross, energy):
    d = cross.shape[1]
    counts[k] = 0
    energy[k] = 0.0
    for i in range(d):
        cross[k, i] = 0.0
        for j in range(d):
            gram[k, i, j] = 0.0


@njit(cache=True)
def py_insert(i, pick, n_active, xs, ys, z, counts, gram, cross, energy,
              u, v, alpha, beta, u0, v0, prec0, prec0_u0, quad0, alpha0, beta0):
    """Assign observation ``i`` to ``pick`` (``== K`` opens a new component)."""
    if pick == n_active:
        _clear_component(pick, counts, gram, cross, energy)
        n_active += 1
    z[i] = pick
    stats_update(pick, counts, gram, cross, energy, xs[i], ys[i], 1.0)
    refresh_posterior(pick, counts, gram, cross, energy, u, v, alpha, beta,
                      u0, v0, prec0, prec0_u0, quad0, alpha0, beta0)
    return n_active


@njit(cache=True)
def py_assign_new(i, n_active, xs, ys, z, counts, gram, cross, energy,
                  u, v, alpha, beta, u0, v0, prec0, prec0_u0, quad0,
                  alpha0, beta0, discount, conc, logw, rng):
    """Draw the initial component for a freshly appended observation ``i``."""
    x = xs[i]
    y = ys[i]
    py_log_weights(x, y, n_active, counts, u, v, alpha, beta,
                   u0, v0, alpha0, beta0, discount, conc, logw)
    pick = sample_from_log_weights(logw, n_active + 1, rng)
    return py_insert(i, pick, n_active, xs, ys, z, counts, gram, cross,
                     energy, u, v, alpha, beta, u0, v0, prec0, prec0_u0,
                     quad0, alpha0, beta0)


@njit(cache=True)
def py_gibbs_sweep(n, n_active, xs, ys, z, counts, gram, cross, energy,
                   u, v, alpha, beta, u0, v0, prec0, prec0_u0, quad0,
                   alpha0, beta0, discount, conc, logw, rng):
    """One collapsed-Gibbs pass over all ``n`` observations in history order.

    Each observation is removed from its component (emptied components are
    swapped with the last label and dropped), then reassigned by a draw from
    the Pitman-Yor conditional, possibly opening a new component.  Returns
    the updated number of active components.
    """
    for i in range(n):
        k = z[i]
        x = xs[i]
        y = ys[i]
        stats_update(k, counts, gram, cross, energy, x, y, -1.0)
        if counts[k] == 0:
            n_active -= 1
            if k != n_active:
                _copy_component(k, n_active, counts, gram, cross, energy,
                                u, v, alpha, beta)
                for t in range(n):
                    if z[t] == n_active:
                        z[t] = k
        else:
            refresh_posterior(k, counts, gram, cross, energy, u, v, alpha,
                              beta, u0, v0, prec0, prec0_u0, quad0, alpha0,
                              beta0)
        py_log_weights(x, y, n_active, counts, u, v, alpha, beta,
                       u0, v0, alpha0, beta0, discount, conc, logw)
        pick = sample_from_log_weights(logw, n_active + 1, rng)
        n_active = py_insert(i, pick, n_active, xs, ys, z, counts, gram,
                             cross, energy, u, v, alpha, beta, u0, v0,
                             prec0, prec0_u0, quad0, alpha0, beta0)
    return n_active


@njit(cache=True)
def py_joint_log_likelihood(n, n_active, xs, ys, z, u0, v0, prec0, prec0_u0,
                            quad0, alpha0, beta0, discount, conc):
    """Joint log probability of assignments and rewards under the PY mixture.

    Accumulates, in history order, the sequential Pitman-Yor partition
    factors and the chain of one-step posterior predictives within each
    block; the emission part equals the per-block marginal likelihood.
    """
    if n == 0:
        return 0.0
    d = xs.shape[1]
    cn = np.zeros(n_active, dtype=np.int64)
    cg = np.zeros((n_active, d, d))
    cc = np.zeros((n_active, d))
    ce = np.zeros(n_active)
    cu = np.empty((n_active, d))
    cv = np.empty((n_active, d, d))
    ca = np.empty(n_active)
    cb = np.empty(n_active)
    for k in range(n_active):
        refresh_posterior(k, cn, cg, cc, ce, cu, cv, ca, cb,
                          u0, v0, prec0, prec0_u0, quad0, alpha0, beta0)
    total = 0.0
    seen = 0
    for i in range(n):
        k = z[i]
        c = cn[k]
        if c == 0:
            if i > 0:
                total += math.log(conc + seen * discount) - math.log(i + conc)
            seen += 1
        else:
            total += math.log(c - discount) - math.log(i + conc)
        total += nig_log_predictive(cu[k], cv[k], ca[k], cb[k], xs[i], ys[i])
        stats_update(k, cn, cg, cc, ce, xs[i], ys[i], 1.0)
        refresh_posterior(k, cn, cg, cc, ce, cu, cv, ca, cb,
                          u0, v0, prec0, prec0_u0, quad0, alpha0, beta0)
    return total


@njit(cache=True)
def finite_assign_new(i, n_components, xs, ys, z, counts, gram, cross, energy,
                      u, v, alpha, beta, u0, v0, prec0, prec0_u0, quad0,
                      alpha0, beta0, conc, logw, rng):
    """Draw the initial component for observation ``i`` under a finite mixture."""
    finite_log_weights(xs[i], ys[i], n_components, counts, u, v, alpha, beta,
                       conc, logw)
    pick = sample_from_log_weights(logw, n_components, rng)
    z[i] = pick
    stats_update(pick, counts, gram, cross, energy, xs[i], ys[i], 1.0)
    refresh_posterior(pick, counts, gram, cross, energy, u, v, alpha, beta,
                      u0, v0, prec0, prec0_u0, quad0, alpha0, beta0)


@njit(cache=True)
def finite_gibbs_sweep(n, n_components, xs, ys, z, counts, gram, cross,
                       energy, u, v, alpha, beta, u0, v0, prec0, prec0_u0,
                       quad0, alpha0, beta0, conc, logw, rng):
    """One collapsed-Gibbs pass for a fixed-size mixture (components never pruned)."""
    for i in range(n):
        k = z[i]
        x = xs[i]
        y = ys[i]
        stats_update(k, counts, gram, cross, energy, x, y, -1.0)
        refresh_posterior(k, counts, gram, cross, energy, u, v, alpha, beta,
                          u0, v0, prec0, prec0_u0, quad0, alpha0, beta0)
        finite_log_weights(x, y, n_components, counts, u, v, alpha, beta,
                           conc, logw)
        pick = sample_from_log_weights(logw, n_components, rng)
        z[i] = pick
        stats_update(pick, counts, gram, cross, energy, x, y, 1.0)
        refresh_posterior(pick, counts, gram, cross, energy, u, v, alpha,
                          beta, u0, v0, prec0, prec0_u0, quad0, alpha0, beta0)


@njit(cache=True)
def finite_joint_log_likelihood(n, n_components, xs, ys, z, u0, v0, prec0,
                                prec0_u0, quad0, alpha0, beta0, conc):
    """Joint log probability under a symmetric-Dirichlet finite mixture."""
    if n == 0:
        return 0.0
    d = xs.shape[1]
    cn = np.zeros(n_components, dtype=np.int64)
    cg = np.zeros((n_components, d, d))
    cc = np.zeros((n_components, d))
    ce = np.zeros(n_components)
    cu = np.empty((n_components, d))
    cv = np.empty((n_components, d, d))
    ca = np.empty(n_components)
    cb = np.empty(n_components)
    for k in range(n_components):
        refresh_posterior(k, cn, cg, cc, ce, cu, cv, ca, cb,
                          u0, v0, prec0, prec0_u0, quad0, alpha0, beta0)
    conc_k = conc / n_components
    total = 0.0
    for i in range(n):
        k = z[i]
        total += math.log(cn[k] + conc_k) - math.log(i + conc)
        total += nig_log_predictive(cu[k], cv[k], ca[k], cb[k], xs[i], ys[i])
        stats_update(k, cn, cg, cc, ce, xs[i], ys[i], 1.0)
        refresh_posterior(k, cn, cg, cc, ce, cu, cv, ca, cb,
                          u0, v0, prec0, prec0_u0, quad0, alpha0, beta0)
    return total
