"""Finite-agent simulation on sampled colored digraphs.

Bridges the limit model to N-agent games: agent i receives the ensemble
policy at the grid point nearest i/N, neighborhoods are 1/N-weighted atom
sums over the sampled edge colors (self-pairs never contribute), and all
updates within a step are synchronous. Monte Carlo batches derive per-run
seeds from one master seed by SeedSequence spawning, so results do not
depend on worker scheduling.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .digraphon import ColorWeightSchedule, KDigraphon, SampledColoredDigraph, sample_graph
from .environments import Environment, NeighborhoodAggregate
from .meanfield import PolicyEnsemble, forward
from .solver import best_response


@dataclass(frozen=True)
class AgentPolicySet:
    """Per-agent policies picked from a policy ensemble at alpha_i = i/N."""

    alphas: np.ndarray
    grid_indices: np.ndarray
    policies: np.ndarray

    @property
    def n_agents(self) -> int:
        return self.alphas.shape[0]

    def replace(self, agent_index: int, policy: np.ndarray) -> "AgentPolicySet":
        """Copy with the 1-based agent's policy substituted."""
        policies = self.policies.copy()
        policies[agent_index - 1] = policy
        return AgentPolicySet(self.alphas, self.grid_indices, policies)


def discretize_policy(pi: PolicyEnsemble, n_agents: int) -> AgentPolicySet:
    """Assign agent i the grid policy nearest to i/N, ties toward the lower index."""
    if n_agents < 1:
        raise ValueError("need at least one agent")
    alphas = np.arange(1, n_agents + 1) / n_agents
    idx = np.abs(pi.grid.points[None, :] - alphas[:, None]).argmin(axis=1)
    policies = pi.pi.transpose(1, 0, 2, 3)[idx]
    return AgentPolicySet(alphas=alphas, grid_indices=idx, policies=policies)


def _color_masks(graph: SampledColoredDigraph) -> np.ndarray:
    """Per-color adjacency indicators with the diagonal zeroed, shape (k, N, N)."""
    masks = (graph.colors[None, :, :] == np.arange(1, graph.k + 1)[:, None, None]).astype(float)
    for h in range(graph.k):
        np.fill_diagonal(masks[h], 0.0)
    return masks


def _color_fields(masks: np.ndarray, states: np.ndarray, n_states: int):
    """Unnormalized per-color neighbor state masses, (N, k, X) out and in."""
    n = states.shape[0]
    onehot = np.zeros((n, n_states))
    onehot[np.arange(n), states] = 1.0
    g_out = np.einsum("hij,jx->ihx", masks, onehot) / n
    g_in = np.einsum("hji,jx->ihx", masks, onehot) / n
    return g_out, g_in


def _weighted_fields(masks, states, n_states, schedule, t):
    n = states.shape[0]
    onehot = np.zeros((n, n_states))
    onehot[np.arange(n), states] = 1.0
    out_mask = np.einsum("h,hij->ij", schedule.out_weights(t), masks)
    in_mask = np.einsum("h,hij->ij", schedule.in_weights(t), masks)
    wout = out_mask @ onehot / n
    win = in_mask.T @ onehot / n
    return win, wout


def empirical_neighborhood(graph: SampledColoredDigraph, states, n_states: int,
                           schedule: ColorWeightSchedule, t: int) -> list[NeighborhoodAggregate]:
    """The 2k neighborhood state distributions of every agent at one time step.

    Every neighbor j != i contributes an atom of mass 1/N to exactly one
    color; self-pairs are skipped, so the total unnormalized mass per
    direction is (N-1)/N.
    """
    states = np.asarray(states)
    if states.shape != (graph.n_nodes,):
        raise ValueError("states must have one entry per node")
    g_out, g_in = _color_fields(_color_masks(graph), states, n_states)
    return [
        NeighborhoodAggregate.from_color_masses(g_out[i], g_in[i], schedule, t)
        for i in range(graph.n_nodes)
    ]


@dataclass(frozen=True)
class SimulationRun:
    """One trajectory of the N-agent game."""

    states: np.ndarray
    actions: np.ndarray
    returns: np.ndarray


@dataclass(frozen=True)
class SimulationBatch:
    """Several independent runs plus the seed ledger that produced them."""

    runs: tuple[SimulationRun, ...]
    master_seed: int
    run_seeds: tuple

    def returns_matrix(self) -> np.ndarray:
        return np.stack([run.returns for run in self.runs])


def _sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one categorical sample per row of a row-stochastic matrix."""
    cum = np.cumsum(probs, axis=1)
    draws = rng.random(probs.shape[0])
    idx = (draws[:, None] >= cum).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def simulate(env: Environment, graph: SampledColoredDigraph, policies: AgentPolicySet,
             schedule: ColorWeightSchedule, seed) -> SimulationRun:
    """Run the N-agent game once; synchronous updates, deterministic per seed.

    At each step all actions are drawn from the time-t states, all empirical
    neighborhoods are computed from those same states, then every agent's
    next state is drawn. Returns accumulate the realized per-agent rewards
    over decision times.
    """
    n = graph.n_nodes
    if policies.n_agents != n:
        raise ValueError(f"policy set has {policies.n_agents} agents, graph has {n}")
    rng = np.random.default_rng(seed)
    masks = _color_masks(graph)
    horizon, nx = env.horizon, env.n_states
    states_hist = np.empty((horizon + 1, n), dtype=np.int64)
    actions_hist = np.empty((horizon, n), dtype=np.int64)
    returns = np.zeros(n)
    states = _sample_rows(np.broadcast_to(env.mu0, (n, nx)), rng)
    states_hist[0] = states
    agents = np.arange(n)
    for t in range(horizon):
        actions = _sample_rows(policies.policies[agents, t, states], rng)
        win, wout = _weighted_fields(masks, states, nx, schedule, t)
        returns += env.reward_values(states, actions, win, wout, t)
        rows = env.transition_rows(states, actions, win, wout, t)
        states = _sample_rows(rows, rng)
        actions_hist[t] = actions
        states_hist[t + 1] = states
    return SimulationRun(states=states_hist, actions=actions_hist, returns=returns)


def simulate_batch(env, W, schedule, policies, n_runs: int, seed: int,
                   workers: int = 1) -> SimulationBatch:
    """Independent runs on freshly sampled graphs with spawned per-run seeds."""
    run_seeds = np.random.SeedSequence(seed).spawn(n_runs)
    fn = partial(_fresh_graph_run, env, W, schedule, policies)
    runs = _run_map(fn, run_seeds, workers)
    return SimulationBatch(runs=tuple(runs), master_seed=seed,
                           run_seeds=tuple(s.spawn_key for s in run_seeds))


def _child_seed(seed_seq: np.random.SeedSequence, index: int) -> np.random.SeedSequence:
    """Pure spawn: the index-th child of a seed, without mutating spawn state.

    Runs that share a parent seed must reproduce bitwise no matter how often
    or in which process they are re-derived, so the stateful spawn() cannot
    be used on shared objects.
    """
    return np.random.SeedSequence(entropy=seed_seq.entropy,
                                  spawn_key=seed_seq.spawn_key + (index,))


def _fresh_graph_run(env, W, schedule, policies, run_seed) -> SimulationRun:
    graph = sample_graph(W, policies.n_agents, _child_seed(run_seed, 0))
    return simulate(env, graph, policies, schedule, _child_seed(run_seed, 1))


def _run_map(fn, items, workers):
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ConvergenceRecord:
    """Mean deviation between empirical and limiting mean field at one N."""

    n_agents: int
    delta_mu_mean: float
    ci_low: float
    ci_high: float
    samples: int

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("need at least two samples for a confidence interval")
        if not self.ci_low <= self.delta_mu_mean <= self.ci_high:
            raise ValueError("confidence interval must bracket the mean")


def _empirical_marginals(states_hist: np.ndarray, n_states: int) -> np.ndarray:
    """Per-step empirical state histograms of one run, shape (T+1, X)."""
    steps, n = states_hist.shape
    out = np.empty((steps, n_states))
    for t in range(steps):
        out[t] = np.bincount(states_hist[t], minlength=n_states) / n
    return out


def _deviation_run(env, W, schedule, policies, limit, run_seed) -> float:
    run = _fresh_graph_run(env, W, schedule, policies, run_seed)
    horizon = limit.shape[0]
    emp = _empirical_marginals(run.states[:horizon], env.n_states)
    return float(np.abs(emp - limit).sum())


def delta_mu(env: Environment, W: KDigraphon, schedule: ColorWeightSchedule,
             pi: PolicyEnsemble, n_list, samples: int, seed: int,
             workers: int = 1) -> list[ConvergenceRecord]:
    """Deviation between empirical and limiting mean field over node counts.

    For each N, `samples` runs are made on freshly sampled graphs; each run
    contributes the summed absolute deviation between its per-step state
    histograms and the index-averaged limiting marginals over decision times.
    Reports the sample mean and a normal-approximation 95% interval.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    limit = forward(env, W, schedule, pi).averaged()[:env.horizon]
    top = np.random.SeedSequence(seed).spawn(len(list(n_list)))
    records = []
    for n_agents, node_seed in zip(n_list, top):
        policies = discretize_policy(pi, n_agents)
        fn = partial(_deviation_run, env, W, schedule, policies, limit)
        devs = np.asarray(_run_map(fn, node_seed.spawn(samples), workers))
        mean = float(devs.mean())
        half = 1.96 * float(devs.std(ddof=1)) / np.sqrt(samples)
        records.append(ConvergenceRecord(
            n_agents=int(n_agents), delta_mu_mean=mean,
            ci_low=mean - half, ci_high=mean + half, samples=samples,
        ))
    return records


@dataclass(frozen=True)
class GapRecord:
    """Estimated improvement one agent can gain by unilateral deviation."""

    agent_index: int
    alpha: float
    gap_estimate: float
    std_error: float


@dataclass(frozen=True)
class GapReport:
    records: tuple[GapRecord, ...]
    samples: int

    def gaps(self) -> np.ndarray:
        return np.array([r.gap_estimate for r in self.records])

    def fraction_above(self, epsilon: float) -> float:
        """Fraction of probed agents whose estimated gap exceeds epsilon."""
        return float((self.gaps() > epsilon).mean())


def _returns_run(env, W, schedule, policies, run_seed) -> np.ndarray:
    return _fresh_graph_run(env, W, schedule, policies, run_seed).returns


def deviation_gap(env: Environment, W: KDigraphon, schedule: ColorWeightSchedule,
                  pi: PolicyEnsemble, n_agents: int, samples: int, seed: int,
                  probe_agents: int = 10, workers: int = 1) -> GapReport:
    """Per-agent deviation gaps of the discretized ensemble policy.

    For a subsample of evenly spaced agents, the agent's value under the
    ensemble policy and under its mean-field best response (everyone else
    fixed) are both estimated with `samples` Monte Carlo runs on freshly
    sampled graphs. Baseline and deviation runs share seeds, so the paired
    difference cancels most of the common noise. Gaps are floored at zero.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    policies = discretize_policy(pi, n_agents)
    mu_limit = forward(env, W, schedule, pi)
    ids = np.unique(np.round(np.linspace(1, n_agents, min(probe_agents, n_agents))).astype(int))
    run_seeds = np.random.SeedSequence(seed).spawn(samples)

    base_fn = partial(_returns_run, env, W, schedule, policies)
    base = np.stack(_run_map(base_fn, run_seeds, workers))
    records = []
    for agent in ids:
        br_policy, _ = best_response(env, W, schedule, mu_limit, agent / n_agents)
        deviated = policies.replace(agent, br_policy)
        dev_fn = partial(_returns_run, env, W, schedule, deviated)
        dev = np.stack(_run_map(dev_fn, run_seeds, workers))
        diffs = dev[:, agent - 1] - base[:, agent - 1]
        gap = max(0.0, float(diffs.mean()))
        se = float(diffs.std(ddof=1)) / np.sqrt(samples)
        records.append(GapRecord(agent_index=int(agent), alpha=agent / n_agents,
                                 gap_estimate=gap, std_error=se))
    return GapReport(records=tuple(records), samples=samples)
