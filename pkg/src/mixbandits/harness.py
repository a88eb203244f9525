"""Experiment configuration, replication runner, regret bookkeeping and CSV IO.

A replication plays one policy against one scenario for a fixed horizon,
recording per-step realized regret (optimal arm's drawn reward minus the
played arm's) and pseudo-regret (gap between true expected rewards).  Each
replication owns a random stream spawned from ``(base_seed, rep_index)``,
so results are identical whether replications run serially or across a
process pool, and reruns are reproducible byte for byte.

CSV layout: a traces file with one row per (replication, step) and an
aggregate file with the per-step mean and standard deviation of the
cumulative regret columns.  Both start with ``#``-prefixed metadata lines
carrying the resolved experiment description, the seed scheme and the code
version.  Execution details (worker count, output paths) are deliberately
not part of the metadata so that outputs are invariant to how the run was
parallelized.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .environments import (ScenarioSpec, builtin_scenario, sample_step,
                           scenario_from_dict, scenario_to_dict,
                           true_expected_rewards)
from .policies import PolicyKind
from .validation import check_positive_int

__all__ = [
    "ExperimentConfig",
    "RegretTrace",
    "AggregateTable",
    "ExperimentResult",
    "resolve_scenario",
    "resolve_config",
    "run_replication",
    "run_experiment",
    "aggregate_traces",
    "write_traces_csv",
    "write_aggregate_csv",
    "read_traces_csv",
    "read_aggregate_csv",
    "aggregate_csv_path",
]

TRACE_COLUMNS = ("rep", "t", "arm", "reward", "realized_regret",
                 "pseudo_regret", "cum_realized", "cum_pseudo", "sweeps_run")
AGGREGATE_COLUMNS = ("t", "mean_cum_pseudo", "std_cum_pseudo",
                     "mean_cum_realized", "std_cum_realized")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment.

    ``scenario`` may be a built-in name or a full :class:`ScenarioSpec`;
    ``policy`` is a :class:`PolicyKind`.  ``parallelism`` only controls how
    replications are scheduled, never their results.
    """

    scenario: object
    policy: PolicyKind
    horizon: int
    replications: int
    base_seed: int
    output_path: str = None
    parallelism: int = 1

    def __post_init__(self):
        check_positive_int(self.horizon, "horizon")
        check_positive_int(self.replications, "replications")
        check_positive_int(self.parallelism, "parallelism")
        if not isinstance(self.base_seed, (int, np.integer)) or self.base_seed < 0:
            raise ValueError("base_seed must be a non-negative integer")


@dataclass(frozen=True)
class RegretTrace:
    """Per-step record of one replication; cumulative columns are prefix sums."""

    rep: int
    t: np.ndarray
    arm: np.ndarray
    reward: np.ndarray
    realized_regret: np.ndarray
    pseudo_regret: np.ndarray
    cum_realized: np.ndarray
    cum_pseudo: np.ndarray
    sweeps_run: np.ndarray

    def validate(self):
        n = len(self.t)
        for name in ("arm", "reward", "realized_regret", "pseudo_regret",
                     "cum_realized", "cum_pseudo", "sweeps_run"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"trace column {name} has wrong length")
        if not np.array_equal(self.t, np.arange(1, n + 1)):
            raise ValueError("trace steps must run 1..horizon")
        if not np.array_equal(self.cum_realized, np.cumsum(self.realized_regret)):
            raise ValueError("cum_realized is not the prefix sum of realized_regret")
        if not np.array_equal(self.cum_pseudo, np.cumsum(self.pseudo_regret)):
            raise ValueError("cum_pseudo is not the prefix sum of pseudo_regret")
        return self


@dataclass(frozen=True)
class AggregateTable:
    """Per-step mean and standard deviation of cumulative regret over
    replications (sample standard deviation, matching shaded-band plots)."""

    t: np.ndarray
    mean_cum_pseudo: np.ndarray
    std_cum_pseudo: np.ndarray
    mean_cum_realized: np.ndarray
    std_cum_realized: np.ndarray


@dataclass(frozen=True)
class ExperimentResult:
    traces: tuple
    aggregate: AggregateTable
    traces_path: str = None
    aggregate_path: str = None


def resolve_scenario(scenario):
    """Accept a ScenarioSpec, a built-in name, or a serialized dict."""
    if isinstance(scenario, ScenarioSpec):
        return scenario
    if isinstance(scenario, str):
        return builtin_scenario(scenario)
    if isinstance(scenario, dict):
        return scenario_from_dict(scenario)
    raise TypeError(f"cannot interpret scenario of type {type(scenario).__name__}")


def resolve_config(cfg):
    """Resolve the scenario and fill the oracle's per-arm component counts."""
    spec = resolve_scenario(cfg.scenario)
    policy = cfg.policy
    if policy.name == "oracle" and policy.oracle_k is None:
        policy = replace(policy,
                         oracle_k=tuple(a.n_components for a in spec.arms))
    if isinstance(policy.oracle_k, tuple) and len(policy.oracle_k) == 1:
        policy = replace(policy, oracle_k=policy.oracle_k * spec.n_arms)
    return replace(cfg, scenario=spec, policy=policy)


def _replication_rng(base_seed, rep_index):
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(rep_index,))
    return np.random.default_rng(seq)


def run_replication(cfg, rep_index):
    """Play one full replication and return its regret trace.

    Module errors abort the replication; the re-raised error names the
    replication and its seed so the failing stream can be replayed.
    """
    cfg = resolve_config(cfg)
    spec = cfg.scenario
    rng = _replication_rng(cfg.base_seed, rep_index)
    policy = cfg.policy.build(spec.n_arms, spec.context_dim)
    horizon = cfg.horizon
    arm = np.empty(horizon, dtype=np.int64)
    reward = np.empty(horizon)
    realized = np.empty(horizon)
    pseudo = np.empty(horizon)
    sweeps = np.empty(horizon, dtype=np.int64)
    try:
        for i in range(horizon):
            step = sample_step(spec, rng)
            decision = policy.select_arm(step.x, rng)
            a = decision.arm
            y = float(step.rewards[a])
            diag = policy.update(a, step.x, y, rng)
            means = true_expected_rewards(spec, step.x)
            arm[i] = a
            reward[i] = y
            realized[i] = step.rewards[step.optimal_arm] - y
            pseudo[i] = means[step.optimal_arm] - means[a]
            sweeps[i] = diag.sweeps_run
    except Exception as exc:
        raise RuntimeError(
            f"replication {rep_index} failed at step {i + 1} "
            f"(base_seed={cfg.base_seed}, spawn_key=({rep_index},)): {exc}"
        ) from exc
    trace = RegretTrace(
        rep=rep_index,
        t=np.arange(1, horizon + 1),
        arm=arm,
        reward=reward,
        realized_regret=realized,
        pseudo_regret=pseudo,
        cum_realized=np.cumsum(realized),
        cum_pseudo=np.cumsum(pseudo),
        sweeps_run=sweeps,
    )
    return trace.validate()


def _worker(payload):
    cfg, rep_index = payload
    return run_replication(cfg, rep_index)


def run_experiment(cfg):
    """Run all replications (optionally across processes) and aggregate.

    When ``cfg.output_path`` is set, writes the traces CSV there and the
    aggregate CSV next to it (``name.csv`` -> ``name.agg.csv``).  For a
    fixed ``base_seed`` the outputs are byte-identical at any parallelism.
    """
    cfg = resolve_config(cfg)
    reps = range(cfg.replications)
    if cfg.parallelism > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            traces = list(pool.map(_worker, [(cfg, r) for r in reps],
                                   chunksize=max(1, cfg.replications
                                                 // (4 * cfg.parallelism))))
    else:
        traces = [run_replication(cfg, r) for r in reps]
    traces.sort(key=lambda tr: tr.rep)
    aggregate = aggregate_traces(traces)
    traces_path = aggregate_path = None
    if cfg.output_path is not None:
        metadata = experiment_metadata(cfg)
        traces_path = str(cfg.output_path)
        aggregate_path = aggregate_csv_path(traces_path)
        write_traces_csv(traces_path, traces, metadata)
        write_aggregate_csv(aggregate_path, aggregate, metadata)
    return ExperimentResult(traces=tuple(traces), aggregate=aggregate,
                            traces_path=traces_path,
                            aggregate_path=aggregate_path)


def aggregate_traces(traces):
    """Per-step mean/std of the cumulative regret columns across traces."""
    if not traces:
        raise ValueError("nothing to aggregate")
    horizon = len(traces[0].t)
    for tr in traces:
        if len(tr.t) != horizon:
            raise ValueError("traces disagree on the horizon")
    cum_pseudo = np.stack([tr.cum_pseudo for tr in traces])
    cum_realized = np.stack([tr.cum_realized for tr in traces])
    ddof = 1 if len(traces) > 1 else 0
    return AggregateTable(
        t=np.arange(1, horizon + 1),
        mean_cum_pseudo=cum_pseudo.mean(axis=0),
        std_cum_pseudo=cum_pseudo.std(axis=0, ddof=ddof),
        mean_cum_realized=cum_realized.mean(axis=0),
        std_cum_realized=cum_realized.std(axis=0, ddof=ddof),
    )


# -- CSV layer ------------------------------------------------------------


def experiment_metadata(cfg):
    """Resolved experiment description embedded at the top of every CSV.

    Scheduling knobs (parallelism, output paths) are excluded on purpose:
    they do not affect results and would break byte-level reproducibility
    across differently parallelized runs.
    """
    cfg = resolve_config(cfg)
    return {
        "base_seed": int(cfg.base_seed),
        "horizon": int(cfg.horizon),
        "policy": cfg.policy.to_dict(),
        "replications": int(cfg.replications),
        "scenario": scenario_to_dict(cfg.scenario),
        "seed_scheme": "SeedSequence(entropy=base_seed, spawn_key=(rep,))",
        "version": __version__,
    }


def _metadata_lines(metadata):
    yield f"# mixbandits {metadata.get('version', __version__)}\n"
    yield "# config=" + json.dumps(metadata, sort_keys=True,
                                   separators=(",", ":")) + "\n"


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_traces_csv(path, traces, metadata=None):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if metadata:
            fh.writelines(_metadata_lines(metadata))
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for tr in traces:
            tr.validate()
            for i in range(len(tr.t)):
                row = (tr.rep, tr.t[i], tr.arm[i], tr.reward[i],
                       tr.realized_regret[i], tr.pseudo_regret[i],
                       tr.cum_realized[i], tr.cum_pseudo[i], tr.sweeps_run[i])
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_aggregate_csv(path, aggregate, metadata=None):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if metadata:
            fh.writelines(_metadata_lines(metadata))
        fh.write(",".join(AGGREGATE_COLUMNS) + "\n")
        for i in range(len(aggregate.t)):
            row = (aggregate.t[i], aggregate.mean_cum_pseudo[i],
                   aggregate.std_cum_pseudo[i], aggregate.mean_cum_realized[i],
                   aggregate.std_cum_realized[i])
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def aggregate_csv_path(traces_path):
    """Derive the aggregate file name: ``runs.csv`` -> ``runs.agg.csv``."""
    path = Path(traces_path)
    if path.suffix == ".csv":
        return str(path.with_suffix(".agg.csv"))
    return str(path) + ".agg.csv"


def _read_csv_columns(path, expected_columns):
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if header is None:
                header = fields
                if tuple(header) != tuple(expected_columns):
                    raise ValueError(
                        f"{path}: expected columns {','.join(expected_columns)}, "
                        f"got {','.join(header)}")
                continue
            rows.append([float(v) for v in fields])
    if header is None:
        raise ValueError(f"{path}: no header found")
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise ValueError(f"{path}: no data rows")
    return {name: data[:, i] for i, name in enumerate(expected_columns)}


def read_traces_csv(path):
    """Read a traces CSV back into a list of :class:`RegretTrace`."""
    cols = _read_csv_columns(path, TRACE_COLUMNS)
    traces = []
    for rep in np.unique(cols["rep"].astype(np.int64)):
        mask = cols["rep"].astype(np.int64) == rep
        traces.append(RegretTrace(
            rep=int(rep),
            t=cols["t"][mask].astype(np.int64),
            arm=cols["arm"][mask].astype(np.int64),
            reward=cols["reward"][mask],
            realized_regret=cols["realized_regret"][mask],
            pseudo_regret=cols["pseudo_regret"][mask],
            cum_realized=cols["cum_realized"][mask],
            cum_pseudo=cols["cum_pseudo"][mask],
            sweeps_run=cols["sweeps_run"][mask].astype(np.int64),
        ))
    return traces


def read_aggregate_csv(path):
    """Read an aggregate CSV back into an :class:`AggregateTable`."""
    cols = _read_csv_columns(path, AGGREGATE_COLUMNS)
    return AggregateTable(t=cols["t"].astype(np.int64),
                          mean_cum_pseudo=cols["mean_cum_pseudo"],
                          std_cum_pseudo=cols["std_cum_pseudo"],
                          mean_cum_realized=cols["mean_cum_realized"],
                          std_cum_realized=cols["std_cum_realized"])
