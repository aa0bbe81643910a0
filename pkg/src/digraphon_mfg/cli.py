"""Command line entry point tying the modules into reproducible experiments.

Subcommands:
  solve         run online mirror descent, write exploitability/policy/meanfield CSVs
  converge      deviation between empirical and limiting mean field over node counts
  gap           per-agent deviation gaps of the solved policy
  sample-graph  draw one colored digraph and export its edge list

Exit codes: 0 success, 2 configuration or usage error, 3 model-consistency
error. `converge` and `gap` read the policy written by a previous `solve`
into the same output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import csvio
from .config import ExperimentConfig, build_scenario, load_config
from .digraphon import sample_graph
from .errors import ConfigError, ModelConsistencyError
from .finite_sim import delta_mu, deviation_gap
from .solver import solve_omd


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(cfg: ExperimentConfig, workers: int = 1) -> None:
    """Run the equilibrium search and write its three CSV artifacts."""
    env, W, schedule = build_scenario(cfg)
    report = solve_omd(
        env, W, schedule,
        grid_m=cfg.solver.grid,
        iterations=cfg.solver.iterations,
        learning_rate=cfg.solver.learning_rate,
        probe_interval=cfg.solver.probe_interval,
        seed=cfg.seed,
    )
    out = _out_dir(cfg)
    csvio.write_exploitability(out / "exploitability.csv", report)
    csvio.write_policy(out / "policy.csv", env, report.policy)
    csvio.write_meanfield(out / "meanfield.csv", env, report.meanfield)
    for name in ("exploitability.csv", "policy.csv", "meanfield.csv"):
        print(f"wrote {out / name}")


def cmd_converge(cfg: ExperimentConfig, workers: int = 1) -> None:
    """Run the mean-field convergence study against the solved policy."""
    env, W, schedule = build_scenario(cfg)
    out = _out_dir(cfg)
    pi = csvio.read_policy(out / "policy.csv", env)
    records = delta_mu(env, W, schedule, pi, cfg.sim.n_list, cfg.sim.samples,
                       cfg.seed, workers=workers)
    csvio.write_convergence(out / "convergence.csv", records)
    print(f"wrote {out / 'convergence.csv'}")


def cmd_gap(cfg: ExperimentConfig, workers: int = 1) -> None:
    """Estimate per-agent deviation gaps of the solved policy."""
    env, W, schedule = build_scenario(cfg)
    out = _out_dir(cfg)
    pi = csvio.read_policy(out / "policy.csv", env)
    report = deviation_gap(env, W, schedule, pi, cfg.sim.gap_n, cfg.sim.deviation_runs,
                           cfg.seed, probe_agents=cfg.sim.deviation_agents, workers=workers)
    csvio.write_gap(out / "gap.csv", report)
    print(f"wrote {out / 'gap.csv'}")


def cmd_sample_graph(cfg: ExperimentConfig, workers: int = 1) -> None:
    """Sample one colored digraph from the configured digraphon."""
    _, W, _ = build_scenario(cfg)
    graph = sample_graph(W, cfg.sim.graph_n, cfg.seed)
    out = _out_dir(cfg)
    csvio.write_edges(out / "edges.csv", graph)
    print(f"wrote {out / 'edges.csv'}")


_COMMANDS = {
    "solve": cmd_solve,
    "converge": cmd_converge,
    "gap": cmd_gap,
    "sample-graph": cmd_sample_graph,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="digraphon-mfg",
                                     description="Mean field games on colored digraphons")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        cmd = sub.add_parser(name, help=fn.__doc__)
        cmd.add_argument("--config", required=True, help="path to the YAML experiment config")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--out", default=None, help="override the output directory")
        cmd.add_argument("--workers", type=int, default=1,
                         help="worker processes for Monte Carlo batches")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, output=args.out)
        _COMMANDS[args.command](cfg, workers=max(1, args.workers))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ModelConsistencyError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
