"""Ground-truth reward generators, scenario specs, and logged-data replay.

Scenarios define per-arm Gaussian-mixture reward distributions whose
component means are linear in the context.  The built-in scenarios are the
standard benchmark set used throughout the test harness: two overlapping
bimodal arms (A), three arms of different complexity (B), a heavy-tailed
pair with outlier noise (C, also exposed as ``C_misspec_pair`` for the
misspecified-model comparison), and a plain linear-Gaussian pair.

The replayer evaluates a policy offline against a logged stream by
accepting exactly the events where the policy's choice matches the logged
arm (rejection replay); with uniform logging this estimates the policy's
on-line CTR unbiasedly.
"""

import csv
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .validation import as_context_vector, as_reward, check_positive_int

__all__ = [
    "MixtureArmSpec",
    "ScenarioSpec",
    "StepSample",
    "LoggedEvent",
    "ReplayResult",
    "UnknownScenarioError",
    "BUILTIN_SCENARIOS",
    "builtin_scenario",
    "true_expected_reward",
    "true_expected_rewards",
    "sample_step",
    "replay",
    "scenario_to_dict",
    "scenario_from_dict",
    "save_scenario",
    "load_scenario",
    "load_logged_events",
    "save_logged_events",
]

CONTEXT_SOURCES = ("uniform01", "standard_normal", "file")


class UnknownScenarioError(ValueError):
    """Raised for a scenario name outside the built-in set."""


@dataclass(frozen=True, eq=False)
class MixtureArmSpec:
    """One arm's true reward law: a Gaussian mixture with linear means.

    Component ``k`` contributes weight ``weights[k]`` of
    ``Normal(x @ coefficients[k], variances[k])``.
    """

    weights: np.ndarray
    coefficients: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        c = np.atleast_2d(np.ascontiguousarray(self.coefficients,
                                               dtype=np.float64))
        v = np.ascontiguousarray(self.variances, dtype=np.float64)
        if not (w.ndim == 1 and v.ndim == 1 and c.ndim == 2):
            raise ValueError("malformed mixture arm specification")
        if not (len(w) == len(v) == c.shape[0]):
            raise ValueError("weights, coefficients and variances must have "
                             "one entry per component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        if np.any(v <= 0):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "variances", v)

    @property
    def n_components(self):
        return len(self.weights)

    @property
    def context_dim(self):
        return self.coefficients.shape[1]


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """A full bandit environment: per-arm mixtures plus a context source."""

    arms: tuple
    context_dim: int
    context_source: str = "uniform01"
    context_file: str = None

    def __post_init__(self):
        arms = tuple(self.arms)
        if not arms:
            raise ValueError("a scenario needs at least one arm")
        check_positive_int(self.context_dim, "context_dim")
        for arm in arms:
            if arm.context_dim != self.context_dim:
                raise ValueError("all arms must share the scenario context_dim")
        if self.context_source not in CONTEXT_SOURCES:
            raise ValueError(f"context_source must be one of {CONTEXT_SOURCES}")
        if (self.context_source == "file") != (self.context_file is not None):
            raise ValueError("context_file is required exactly when "
                             "context_source is 'file'")
        object.__setattr__(self, "arms", arms)

    @property
    def n_arms(self):
        return len(self.arms)


@dataclass(frozen=True)
class StepSample:
    """One environment step: context, counterfactual rewards for every arm,
    and the index of the truly optimal arm."""

    x: np.ndarray
    rewards: np.ndarray
    optimal_arm: int


@dataclass(frozen=True)
class LoggedEvent:
    """One record of a logged interaction: context, the arm the logger
    played, and the observed reward."""

    context: np.ndarray
    logged_arm: int
    reward: float


@dataclass(frozen=True)
class ReplayResult:
    """Rejection-replay tallies; ``ctr`` is None when nothing was accepted."""

    accepted_count: int
    click_sum: float
    ctr: float = None


def _arm(weights, coefficients, variances):
    return MixtureArmSpec(np.asarray(weights, dtype=float),
                          np.asarray(coefficients, dtype=float),
                          np.asarray(variances, dtype=float))


def _scenario_a():
    return ScenarioSpec(
        arms=(
            _arm([0.5, 0.5], [[1.0, 1.0], [2.0, 2.0]], [1.0, 1.0]),
            _arm([0.3, 0.7], [[0.0, 0.0], [3.0, 3.0]], [1.0, 1.0]),
        ),
        context_dim=2,
    )


def _scenario_b():
    return ScenarioSpec(
        arms=(
            _arm([1.0], [[1.0, 1.0]], [1.0]),
            _arm([0.5, 0.5], [[1.0, 1.0], [2.0, 2.0]], [1.0, 1.0]),
            _arm([0.3, 0.6, 0.1],
                 [[0.0, 0.0], [3.0, 3.0], [4.0, 4.0]],
                 [1.0, 1.0, 1.0]),
        ),
        context_dim=2,
    )


def _scenario_c():
    return ScenarioSpec(
        arms=(
            _arm([0.75, 0.25], [[0.0, 0.0], [0.0, 0.0]], [1.0, 10.0]),
            _arm([0.75, 0.25], [[2.0, 2.0], [2.0, 2.0]], [1.0, 10.0]),
        ),
        context_dim=2,
    )


def _scenario_linear_gaussian():
    return ScenarioSpec(
        arms=(
            _arm([1.0], [[1.0, 1.0]], [1.0]),
            _arm([1.0], [[2.0, 2.0]], [1.0]),
        ),
        context_dim=2,
    )


BUILTIN_SCENARIOS = {
    "A": _scenario_a,
    "B": _scenario_b,
    "C": _scenario_c,
    "linear_gaussian": _scenario_linear_gaussian,
    # the heavy-tailed pair again, under the name used for the
    # misspecified-model comparison
    "C_misspec_pair": _scenario_c,
}


def builtin_scenario(name):
    """Return a built-in :class:`ScenarioSpec` by name."""
    try:
        factory = BUILTIN_SCENARIOS[name]
    except KeyError:
        valid = ", ".join(sorted(BUILTIN_SCENARIOS))
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; valid names: {valid}") from None
    return factory()


def true_expected_reward(spec, arm, x):
    """Expected reward of ``arm`` at context ``x`` under the true model."""
    if not 0 <= arm < spec.n_arms:
        raise IndexError(f"arm {arm} out of range [0, {spec.n_arms})")
    a = spec.arms[arm]
    x = as_context_vector(x, spec.context_dim)
    return float(a.weights @ (a.coefficients @ x))


def true_expected_rewards(spec, x):
    """Vector of true expected rewards over all arms at context ``x``."""
    x = as_context_vector(x, spec.context_dim)
    return np.array([float(a.weights @ (a.coefficients @ x))
                     for a in spec.arms])


@lru_cache(maxsize=8)
def _context_rows(path):
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    if not np.all(np.isfinite(rows)):
        raise ValueError(f"context file {path} contains non-finite entries")
    return rows


def _draw_context(spec, rng):
    if spec.context_source == "uniform01":
        return rng.random(spec.context_dim)
    if spec.context_source == "standard_normal":
        return rng.standard_normal(spec.context_dim)
    rows = _context_rows(spec.context_file)
    if rows.shape[1] != spec.context_dim:
        raise ValueError(
            f"context file has dimension {rows.shape[1]}, scenario expects "
            f"{spec.context_dim}")
    return rows[int(rng.integers(rows.shape[0]))].copy()


def sample_step(spec, rng):
    """Draw a context and realized rewards for every arm.

    All arms' rewards are realized so that replaying counterfactuals (for
    realized regret) stays consistent; the optimal arm is the argmax of the
    true expected rewards with ties going to the lowest index.
    """
    x = _draw_context(spec, rng)
    rewards = np.empty(spec.n_arms)
    for a, arm in enumerate(spec.arms):
        k = int(np.searchsorted(np.cumsum(arm.weights), rng.random()))
        k = min(k, arm.n_components - 1)
        mean = float(arm.coefficients[k] @ x)
        rewards[a] = mean + np.sqrt(arm.variances[k]) * rng.standard_normal()
    means = true_expected_rewards(spec, x)
    return StepSample(x=x, rewards=rewards, optimal_arm=int(np.argmax(means)))


def replay(events, policy, rng):
    """Rejection replay of a logged stream against ``policy``.

    The policy picks an arm for each event's context; matching events are
    accepted (the reward is revealed to the policy and tallied), the rest
    are skipped without touching the policy.
    """
    accepted = 0
    click_sum = 0.0
    for event in events:
        decision = policy.select_arm(event.context, rng)
        if decision.arm != event.logged_arm:
            continue
        policy.update(event.logged_arm, event.context, event.reward, rng)
        accepted += 1
        click_sum += event.reward
    ctr = click_sum / accepted if accepted > 0 else None
    return ReplayResult(accepted_count=accepted, click_sum=click_sum, ctr=ctr)


# -- serialization -------------------------------------------------------


def scenario_to_dict(spec):
    out = {
        "arms": [
            {
                "weights": arm.weights.tolist(),
                "coefficients": arm.coefficients.tolist(),
                "variances": arm.variances.tolist(),
            }
            for arm in spec.arms
        ],
        "context_dim": spec.context_dim,
        "context_source": spec.context_source,
    }
    if spec.context_file is not None:
        out["context_file"] = spec.context_file
    return out


def scenario_from_dict(data):
    arms = tuple(
        MixtureArmSpec(np.asarray(arm["weights"], dtype=float),
                       np.asarray(arm["coefficients"], dtype=float),
                       np.asarray(arm["variances"], dtype=float))
        for arm in data["arms"])
    return ScenarioSpec(arms=arms, context_dim=int(data["context_dim"]),
                        context_source=data.get("context_source", "uniform01"),
                        context_file=data.get("context_file"))


def save_scenario(spec, path):
    Path(path).write_text(json.dumps(scenario_to_dict(spec), indent=2) + "\n",
                          encoding="utf-8")


def load_scenario(path):
    return scenario_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- logged-event files ---------------------------------------------------


def _logged_header(context_dim):
    return [f"context_{i}" for i in range(context_dim)] + ["arm", "reward"]


def save_logged_events(events, path):
    """Write events as CSV with header ``context_0,...,arm,reward``."""
    events = list(events)
    if not events:
        raise ValueError("cannot save an empty event log")
    d = len(events[0].context)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_logged_header(d))
        for event in events:
            writer.writerow([repr(float(v)) for v in event.context]
                            + [int(event.logged_arm), repr(float(event.reward))])


def load_logged_events(path):
    """Read a logged-event CSV; returns ``(events, n_arms, context_dim)``.

    The declared arm count is one more than the largest logged index.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty log file")
        d = len(header) - 2
        if d < 1 or header != _logged_header(d):
            raise ValueError(
                f"{path}: expected header context_0,...,context_{{d-1}},arm,reward")
        events = []
        for row in reader:
            if not row:
                continue
            if len(row) != d + 2:
                raise ValueError(f"{path}: row {len(events) + 2} has "
                                 f"{len(row)} fields, expected {d + 2}")
            context = as_context_vector([float(v) for v in row[:d]], d)
            arm = int(row[d])
            if arm < 0:
                raise ValueError(f"{path}: negative arm index {arm}")
            events.append(LoggedEvent(context=context, logged_arm=arm,
                                      reward=as_reward(float(row[d + 1]))))
    if not events:
        raise ValueError(f"{path}: log contains no events")
    n_arms = max(e.logged_arm for e in events) + 1
    return events, n_arms, d
