"""Command-line interface: run experiments, replay logs, aggregate traces.

Exit codes: 0 on success, 1 on usage/configuration errors (with a message
naming the valid options), 2 on runtime failures.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .environments import (UnknownScenarioError, builtin_scenario,
                           load_logged_events, load_scenario, replay)
from .harness import (ExperimentConfig, aggregate_traces, experiment_metadata,
                      read_traces_csv, run_experiment, write_aggregate_csv)
from .policies import POLICY_NAMES, PolicyKind

__all__ = ["main"]


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _build_parser():
    parser = _Parser(
        prog="mixbandits",
        description="Thompson sampling for contextual bandits with "
                    "nonparametric Gaussian-mixture reward models.",
    )
    parser.add_argument("--version", action="version",
                        version=f"mixbandits {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    # run flags default to None so config-file values can fill the gaps;
    # the effective defaults are spelled out in the help strings instead
    run = sub.add_parser("run", help="run a simulated experiment")
    run.add_argument("--config", metavar="JSON",
                     help="experiment config file; flags override its values")
    run.add_argument("--scenario", metavar="NAME",
                     help="built-in scenario name (A, B, C, linear_gaussian, "
                          "C_misspec_pair)")
    run.add_argument("--scenario-file", metavar="JSON",
                     help="scenario specification file")
    run.add_argument("--policy", choices=POLICY_NAMES,
                     help="policy to evaluate")
    run.add_argument("--horizon", type=int, help="steps per replication "
                     "(default 500)")
    run.add_argument("--reps", type=int, help="independent replications "
                     "(default 100)")
    run.add_argument("--seed", type=int, help="base seed (default 0)")
    run.add_argument("--gamma", type=float,
                     help="mixture concentration (default 0.1)")
    run.add_argument("--discount", type=float,
                     help="Pitman-Yor discount (default 0)")
    run.add_argument("--gibbs-max", type=int,
                     help="max Gibbs sweeps per interaction (default 10)")
    run.add_argument("--gibbs-eps", type=float,
                     help="relative log-likelihood convergence margin "
                          "(default 0.01)")
    run.add_argument("--oracle-k", metavar="K[,K...]",
                     help="oracle per-arm component counts "
                          "(default: the scenario's true counts)")
    run.add_argument("--out", metavar="CSV",
                     help="traces output path; the aggregate is written "
                          "next to it as NAME.agg.csv")
    run.add_argument("--parallelism", type=int,
                     help="worker processes (default 1; results are "
                          "independent of this)")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser(
        "replay", help="replay a logged dataset against a policy",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    rep.add_argument("--log-file", required=True, metavar="CSV",
                     help="logged events (context_0,...,arm,reward)")
    rep.add_argument("--policy", choices=POLICY_NAMES, default="nonparametric")
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--gamma", type=float, default=0.1,
                     help="mixture concentration")
    rep.add_argument("--discount", type=float, default=0.0,
                     help="Pitman-Yor discount")
    rep.add_argument("--gibbs-max", type=int, default=10)
    rep.add_argument("--gibbs-eps", type=float, default=0.01)
    rep.add_argument("--oracle-k", metavar="K[,K...]",
                     help="oracle per-arm component counts")
    rep.add_argument("--out", metavar="JSON", help="write the summary here "
                     "as well as to stdout")
    rep.set_defaults(func=_cmd_replay)

    agg = sub.add_parser(
        "aggregate", help="aggregate one or more traces CSVs",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    agg.add_argument("--inputs", nargs="+", required=True, metavar="CSV",
                     help="traces files produced by `run`")
    agg.add_argument("--out", required=True, metavar="CSV",
                     help="aggregate output path")
    agg.set_defaults(func=_cmd_aggregate)
    return parser


def _parse_oracle_k(text):
    if text is None:
        return None
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"--oracle-k expects integers like '2,2', got {text!r}")


def _merged(args, file_cfg, flag, key, default):
    value = getattr(args, flag)
    if value is not None:
        return value
    if key in file_cfg:
        return file_cfg[key]
    return default


def _cmd_run(args):
    file_cfg = {}
    if args.config:
        file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))

    if args.scenario and args.scenario_file:
        raise UsageError("give either --scenario or --scenario-file, not both")
    if args.scenario:
        scenario = builtin_scenario(args.scenario)
    elif args.scenario_file:
        scenario = load_scenario(args.scenario_file)
    elif "scenario" in file_cfg:
        scenario = file_cfg["scenario"]
    else:
        raise UsageError("a scenario is required (--scenario, --scenario-file "
                         "or a config file)")

    file_policy = file_cfg.get("policy", {})
    if isinstance(file_policy, str):
        file_policy = {"name": file_policy}
    policy_name = args.policy or file_policy.get("name")
    if policy_name is None:
        raise UsageError("a policy is required (--policy or a config file); "
                         "valid names: " + ", ".join(POLICY_NAMES))
    try:
        policy = PolicyKind(
            name=policy_name,
            concentration=_merged(args, file_policy, "gamma", "concentration",
                                  0.1),
            discount=_merged(args, file_policy, "discount", "discount", 0.0),
            gibbs_eps=_merged(args, file_policy, "gibbs_eps", "gibbs_eps", 0.01),
            gibbs_max=_merged(args, file_policy, "gibbs_max", "gibbs_max", 10),
            oracle_k=(_parse_oracle_k(args.oracle_k)
                      if args.oracle_k is not None
                      else file_policy.get("oracle_k")),
            prior_alpha=file_policy.get("prior_alpha", 1.0),
            prior_beta=file_policy.get("prior_beta", 1.0),
            prior_scale=file_policy.get("prior_scale", 1.0),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    try:
        cfg = ExperimentConfig(
            scenario=scenario,
            policy=policy,
            horizon=_merged(args, file_cfg, "horizon", "horizon", 500),
            replications=_merged(args, file_cfg, "reps", "replications", 100),
            base_seed=_merged(args, file_cfg, "seed", "base_seed", 0),
            output_path=_merged(args, file_cfg, "out", "output_path", None),
            parallelism=_merged(args, file_cfg, "parallelism", "parallelism", 1),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    result = run_experiment(cfg)
    final = result.aggregate
    summary = {
        "mean_cum_pseudo_final": float(final.mean_cum_pseudo[-1]),
        "std_cum_pseudo_final": float(final.std_cum_pseudo[-1]),
        "mean_cum_realized_final": float(final.mean_cum_realized[-1]),
        "replications": cfg.replications,
        "horizon": cfg.horizon,
    }
    if result.traces_path:
        summary["traces"] = result.traces_path
        summary["aggregate"] = result.aggregate_path
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_replay(args):
    events, n_arms, context_dim = load_logged_events(args.log_file)
    oracle_k = _parse_oracle_k(args.oracle_k)
    if args.policy == "oracle" and oracle_k is None:
        raise UsageError("the oracle policy needs --oracle-k on replay "
                         "(no scenario to read the true counts from)")
    if oracle_k is not None and len(oracle_k) == 1:
        oracle_k = oracle_k * n_arms
    try:
        kind = PolicyKind(name=args.policy, concentration=args.gamma,
                          discount=args.discount, gibbs_eps=args.gibbs_eps,
                          gibbs_max=args.gibbs_max, oracle_k=oracle_k)
        policy = kind.build(n_arms, context_dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=args.seed, spawn_key=(0,)))
    result = replay(events, policy, rng)
    summary = {
        "events": len(events),
        "n_arms": n_arms,
        "accepted_count": result.accepted_count,
        "click_sum": result.click_sum,
        "ctr": result.ctr,
        "policy": kind.to_dict(),
        "seed": args.seed,
    }
    text = json.dumps(summary, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def _cmd_aggregate(args):
    traces = []
    for path in args.inputs:
        for trace in read_traces_csv(path):
            traces.append(trace)
    aggregate = aggregate_traces(traces)
    metadata = {
        "inputs": list(args.inputs),
        "replications": len(traces),
        "version": __version__,
    }
    write_aggregate_csv(args.out, aggregate, metadata)
    print(json.dumps({"out": args.out, "replications": len(traces)},
                     sort_keys=True))
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mixbandits: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, UnknownScenarioError) as exc:
        print(f"mixbandits: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive runtime path
        print(f"mixbandits: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
