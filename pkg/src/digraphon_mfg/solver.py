"""Best responses, exploitability and equilibrium search by online mirror descent.

All state-action values are exact finite-horizon backward recursions under a
frozen mean field; there is no sampling anywhere in this module, so identical
inputs give bitwise-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .digraphon import ColorWeightSchedule, KDigraphon
from .environments import Environment
from .errors import ModelConsistencyError
from .meanfield import (
    IndexGrid,
    MeanFieldEnsemble,
    PolicyEnsemble,
    _propagate,
    kernel_matrices,
)

EXPLOITABILITY_FLOOR = -1e-9


@dataclass(frozen=True)
class QTable:
    """State-action values under a frozen mean field, indexed (t, x, u)."""

    values: np.ndarray


@dataclass(frozen=True)
class SolveReport:
    """Result of an equilibrium search run."""

    policy: PolicyEnsemble
    meanfield: MeanFieldEnsemble
    probe_iterations: np.ndarray
    exploitability_history: np.ndarray
    config: dict


def _alpha_fields(W: KDigraphon, schedule: ColorWeightSchedule, grid: IndexGrid,
                  mu: MeanFieldEnsemble, alpha: float):
    """Weighted in/out fields at one index for every decision time, each (T, X)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0,1]")
    horizon = mu.horizon
    pts = grid.points
    kout = np.stack([W.kernels[h](alpha, pts) for h in range(W.k)])
    kin = np.stack([W.kernels[h](pts, alpha) for h in range(W.k)])
    g_out = np.einsum("hb,tbx->thx", kout, mu.mu[:horizon]) / grid.m
    g_in = np.einsum("hb,tbx->thx", kin, mu.mu[:horizon]) / grid.m
    w_out = np.stack([schedule.out_weights(t) for t in range(horizon)])
    w_in = np.stack([schedule.in_weights(t) for t in range(horizon)])
    win = np.einsum("th,thx->tx", w_in, g_in)
    wout = np.einsum("th,thx->tx", w_out, g_out)
    return win, wout


def q_values(env: Environment, W: KDigraphon, schedule: ColorWeightSchedule,
             mu: MeanFieldEnsemble, alpha: float, pi_alpha: np.ndarray):
    """Backward policy evaluation at one index under a frozen mean field.

    Returns the QTable and the total expected reward J of the policy. The
    terminal value is zero: rewards accrue at decision times 0..T-1 only.
    """
    pi_alpha = np.asarray(pi_alpha, dtype=float)
    horizon, nx, nu = env.horizon, env.n_states, env.n_actions
    if pi_alpha.shape != (horizon, nx, nu):
        raise ValueError("pi_alpha must have shape (T, X, U)")
    win, wout = _alpha_fields(W, schedule, mu.grid, mu, alpha)
    q = np.empty((horizon, nx, nu))
    v = np.zeros(nx)
    for t in reversed(range(horizon)):
        tensor = env.transition_tensor(win[t], wout[t], t)
        q[t] = env.reward_matrix(win[t], wout[t], t) + tensor @ v
        v = np.einsum("xu,xu->x", pi_alpha[t], q[t])
    return QTable(q), float(env.mu0 @ v)


def best_response(env: Environment, W: KDigraphon, schedule: ColorWeightSchedule,
                  mu: MeanFieldEnsemble, alpha: float):
    """Optimal deterministic policy at one index against a frozen mean field.

    Finite-horizon dynamic programming with argmax ties broken toward the
    lowest action index. Returns (policy of shape (T, X, U), optimal value).
    """
    horizon, nx, nu = env.horizon, env.n_states, env.n_actions
    win, wout = _alpha_fields(W, schedule, mu.grid, mu, alpha)
    policy = np.zeros((horizon, nx, nu))
    v = np.zeros(nx)
    for t in reversed(range(horizon)):
        tensor = env.transition_tensor(win[t], wout[t], t)
        q = env.reward_matrix(win[t], wout[t], t) + tensor @ v
        greedy = q.argmax(axis=1)
        policy[t, np.arange(nx), greedy] = 1.0
        v = q[np.arange(nx), greedy]
    return policy, float(env.mu0 @ v)


def exploitability(env: Environment, W: KDigraphon, schedule: ColorWeightSchedule,
                   pi: PolicyEnsemble, mu: MeanFieldEnsemble | None = None) -> float:
    """Grid-averaged gap between best-response value and policy value.

    The supremum is exact per grid index; the index integral is the grid
    average, so the result is an approximate exploitability in that sense.
    Zero exactly at an equilibrium of the discretized game.
    """
    from .meanfield import forward

    if mu is None:
        mu = forward(env, W, schedule, pi)
    gaps = np.empty(pi.grid.m)
    for m, alpha in enumerate(pi.grid.points):
        _, value = q_values(env, W, schedule, mu, alpha, pi.pi[:, m])
        _, best = best_response(env, W, schedule, mu, alpha)
        gaps[m] = best - value
    total = float(gaps.mean())
    if total < EXPLOITABILITY_FLOOR:
        raise ModelConsistencyError(f"exploitability {total:.3e} below the numerical floor")
    return max(total, 0.0)


def _softmax(y: np.ndarray) -> np.ndarray:
    z = y - y.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def solve_omd(env: Environment, W: KDigraphon, schedule: ColorWeightSchedule, *,
              grid_m: int = 50, iterations: int = 100, learning_rate: float = 0.1,
              probe_interval: int = 1, seed: int = 0) -> SolveReport:
    """Equilibrium search by online mirror descent with softmax policies.

    Cumulative tables y accumulate learning_rate times the policy's Q-values
    under its own induced mean field; the next policy is the softmax of y per
    (t, index, state). The policy entering iteration n is evaluated there, so
    the first history entry is the exploitability of the uniform initial
    policy. The run is deterministic; `seed` is carried in the config echo
    for downstream simulation stages.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    if learning_rate <= 0.0:
        raise ValueError("learning_rate must be positive")
    if probe_interval < 1:
        raise ValueError("probe_interval must be at least 1")
    grid = IndexGrid(grid_m)
    kmats = kernel_matrices(W, grid)
    horizon, nx, nu = env.horizon, env.n_states, env.n_actions
    m = grid.m
    y = np.zeros((horizon, m, nx, nu))
    pi_arr = np.full((horizon, m, nx, nu), 1.0 / nu)
    probes: list[int] = []
    history: list[float] = []
    for n in range(1, iterations + 1):
        _, wins, wouts = _propagate(env, schedule, pi_arr, kmats, grid)
        probe = (n - 1) % probe_interval == 0 or n == iterations
        q = np.empty((horizon, m, nx, nu))
        v_pi = np.zeros((m, nx))
        v_star = np.zeros((m, nx))
        for t in reversed(range(horizon)):
            tensors = env.transition_tensors(wins[t], wouts[t], t)
            rewards = env.reward_matrices(wins[t], wouts[t], t)
            q[t] = rewards + np.einsum("mxuy,my->mxu", tensors, v_pi)
            v_pi = np.einsum("mxu,mxu->mx", pi_arr[t], q[t])
            if probe:
                q_star = rewards + np.einsum("mxuy,my->mxu", tensors, v_star)
                v_star = q_star.max(axis=2)
        if probe:
            gap = float(((v_star - v_pi) @ env.mu0).mean())
            if gap < EXPLOITABILITY_FLOOR:
                raise ModelConsistencyError(f"exploitability {gap:.3e} below the numerical floor")
            probes.append(n)
            history.append(max(gap, 0.0))
        y += learning_rate * q
        if not np.isfinite(y).all():
            raise ModelConsistencyError("non-finite mirror descent state; model produced "
                                        "unbounded values")
        pi_arr = _softmax(y)
    policy = PolicyEnsemble(grid, pi_arr)
    mu_final, _, _ = _propagate(env, schedule, pi_arr, kmats, grid)
    config = {
        "env": env.name,
        "digraphon": W.name,
        "schedule": schedule.description,
        "grid": grid_m,
        "iterations": iterations,
        "learning_rate": learning_rate,
        "probe_interval": probe_interval,
        "seed": seed,
    }
    return SolveReport(
        policy=policy,
        meanfield=MeanFieldEnsemble(grid, mu_final),
        probe_iterations=np.asarray(probes, dtype=int),
        exploitability_history=np.asarray(history, dtype=float),
        config=config,
    )
