"""CSV schemas shared by the command line tools and downstream plotting.

Numbers are serialized with 17 significant digits so reruns are bit-exact and
values round-trip through float() without loss. Every file carries a header
row and rows are emitted in a fixed deterministic order.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .digraphon import SampledColoredDigraph
from .environments import Environment
from .errors import ConfigError
from .finite_sim import ConvergenceRecord, GapReport
from .meanfield import IndexGrid, MeanFieldEnsemble, PolicyEnsemble
from .solver import SolveReport


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _writer(handle):
    return csv.writer(handle, lineterminator="\n")


def write_exploitability(path, report: SolveReport) -> None:
    with open(path, "w", newline="") as handle:
        out = _writer(handle)
        out.writerow(["iteration", "exploitability"])
        for it, val in zip(report.probe_iterations, report.exploitability_history):
            out.writerow([int(it), _fmt(val)])


def write_policy(path, env: Environment, policy: PolicyEnsemble) -> None:
    with open(path, "w", newline="") as handle:
        out = _writer(handle)
        out.writerow(["t", "alpha", "state", "action", "probability"])
        for t in range(policy.horizon):
            for m, alpha in enumerate(policy.grid.points):
                for x, state in enumerate(env.states):
                    for u, action in enumerate(env.actions):
                        out.writerow([t, _fmt(alpha), state, action,
                                      _fmt(policy.pi[t, m, x, u])])


def read_policy(path, env: Environment) -> PolicyEnsemble:
    """Rebuild a policy ensemble from its CSV export, validating against env."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"policy file {path} not found; run the solve command first")
    state_idx = {s: i for i, s in enumerate(env.states)}
    action_idx = {a: i for i, a in enumerate(env.actions)}
    rows = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["t", "alpha", "state", "action", "probability"]:
            raise ConfigError(f"{path} is not a policy CSV (bad header {header})")
        for rec in reader:
            t, alpha, state, action, prob = rec
            if state not in state_idx or action not in action_idx:
                raise ConfigError(
                    f"policy file {path} refers to state/action {state!r}/{action!r} "
                    f"unknown to environment {env.name!r}"
                )
            rows.append((int(t), float(alpha), state_idx[state], action_idx[action],
                         float(prob)))
    if not rows:
        raise ConfigError(f"policy file {path} is empty")
    alphas = sorted({r[1] for r in rows})
    grid = IndexGrid(len(alphas))
    if np.abs(np.asarray(alphas) - grid.points).max() > 1e-12:
        raise ConfigError(f"policy file {path} does not use a midpoint index grid")
    horizon = max(r[0] for r in rows) + 1
    if horizon != env.horizon:
        raise ConfigError(
            f"policy file horizon {horizon} does not match environment horizon {env.horizon}"
        )
    alpha_idx = {a: i for i, a in enumerate(alphas)}
    pi = np.full((horizon, grid.m, env.n_states, env.n_actions), np.nan)
    for t, alpha, x, u, prob in rows:
        pi[t, alpha_idx[alpha], x, u] = prob
    if np.isnan(pi).any():
        raise ConfigError(f"policy file {path} has missing (t, alpha, state, action) entries")
    return PolicyEnsemble(grid, pi)


def write_meanfield(path, env: Environment, mf: MeanFieldEnsemble) -> None:
    with open(path, "w", newline="") as handle:
        out = _writer(handle)
        out.writerow(["t", "alpha", "state", "probability"])
        for t in range(mf.mu.shape[0]):
            for m, alpha in enumerate(mf.grid.points):
                for x, state in enumerate(env.states):
                    out.writerow([t, _fmt(alpha), state, _fmt(mf.mu[t, m, x])])


def write_convergence(path, records: list[ConvergenceRecord]) -> None:
    with open(path, "w", newline="") as handle:
        out = _writer(handle)
        out.writerow(["N", "delta_mu_mean", "ci_low", "ci_high", "samples"])
        for rec in records:
            out.writerow([rec.n_agents, _fmt(rec.delta_mu_mean), _fmt(rec.ci_low),
                          _fmt(rec.ci_high), rec.samples])


def write_gap(path, report: GapReport) -> None:
    with open(path, "w", newline="") as handle:
        out = _writer(handle)
        out.writerow(["agent_index", "alpha", "gap_estimate", "std_error"])
        for rec in report.records:
            out.writerow([rec.agent_index, _fmt(rec.alpha), _fmt(rec.gap_estimate),
                          _fmt(rec.std_error)])


def write_edges(path, graph: SampledColoredDigraph) -> None:
    """Edge list with 1-based node indices; self-pairs are omitted because
    their color is fixed by convention rather than sampled."""
    with open(path, "w", newline="") as handle:
        out = _writer(handle)
        out.writerow(["i", "j", "color"])
        for i in range(graph.n_nodes):
            for j in range(graph.n_nodes):
                if i != j:
                    out.writerow([i + 1, j + 1, int(graph.colors[i, j])])
