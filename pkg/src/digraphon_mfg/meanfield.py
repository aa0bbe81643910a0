"""Discretized mean-field and policy ensembles on the graphon index space.

The index interval [0,1] is discretized by midpoint quadrature: grid point m
of M sits at (m - 1/2)/M. Neighborhood integrals against the mean field
become kernel-weighted grid averages, and the forward map propagates the
per-index state distributions through the environment dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .digraphon import ColorWeightSchedule, KDigraphon
from .environments import Environment, NeighborhoodAggregate

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class IndexGrid:
    """Uniform midpoint grid on the graphon index space."""

    m: int
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("grid needs at least one point")
        object.__setattr__(self, "points", (np.arange(self.m) + 0.5) / self.m)


@dataclass(frozen=True)
class MeanFieldEnsemble:
    """State distributions mu[t, m] for t in 0..T and every grid index."""

    grid: IndexGrid
    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 3 or mu.shape[1] != self.grid.m:
            raise ValueError("mu must have shape (T+1, M, X)")
        if mu.min() < -NORMALIZATION_TOL:
            raise ValueError("mean field has negative mass")
        err = np.abs(mu.sum(axis=2) - 1.0).max()
        if err > NORMALIZATION_TOL:
            raise ValueError(f"mean field slices are not normalized: max deviation {err:.3e}")
        object.__setattr__(self, "mu", mu)

    @property
    def horizon(self) -> int:
        return self.mu.shape[0] - 1

    @property
    def n_states(self) -> int:
        return self.mu.shape[2]

    def averaged(self) -> np.ndarray:
        """Index-averaged marginals, shape (T+1, X)."""
        return self.mu.mean(axis=1)


@dataclass(frozen=True)
class PolicyEnsemble:
    """Action distributions pi[t, m, x] for t in 0..T-1 and every grid index."""

    grid: IndexGrid
    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        if pi.ndim != 4 or pi.shape[1] != self.grid.m:
            raise ValueError("pi must have shape (T, M, X, U)")
        if pi.min() < -NORMALIZATION_TOL:
            raise ValueError("policy has negative probabilities")
        err = np.abs(pi.sum(axis=3) - 1.0).max()
        if err > 1e-8:
            raise ValueError(f"policy rows are not normalized: max deviation {err:.3e}")
        object.__setattr__(self, "pi", pi)

    @property
    def horizon(self) -> int:
        return self.pi.shape[0]

    @classmethod
    def uniform(cls, grid: IndexGrid, horizon: int, n_states: int, n_actions: int):
        pi = np.full((horizon, grid.m, n_states, n_actions), 1.0 / n_actions)
        return cls(grid, pi)


def kernel_matrices(W: KDigraphon, grid: IndexGrid) -> np.ndarray:
    """Kernel values on the grid, shape (k, M, M) with K[h, a, b] = W^h(alpha_a, alpha_b).

    Computing these once and passing them to `forward` via `kernels=` avoids
    re-evaluating closed-form kernels inside iteration loops.
    """
    pts = grid.points
    return np.stack([W.kernels[h](pts[:, None], pts[None, :]) for h in range(W.k)])


def _weighted_fields(kmats: np.ndarray, schedule: ColorWeightSchedule, mu_t: np.ndarray, t: int):
    """Weighted incoming/outgoing fields for every grid index, each (M, X)."""
    m = mu_t.shape[0]
    g_out = np.einsum("hab,bx->ahx", kmats, mu_t) / m
    g_in = np.einsum("hba,bx->ahx", kmats, mu_t) / m
    win = np.einsum("h,ahx->ax", schedule.in_weights(t), g_in)
    wout = np.einsum("h,ahx->ax", schedule.out_weights(t), g_out)
    return win, wout


def neighborhood(W: KDigraphon, schedule: ColorWeightSchedule, grid: IndexGrid,
                 mu_t: np.ndarray, alpha: float, t: int) -> NeighborhoodAggregate:
    """Neighborhood state distributions of index alpha against one mean-field slice.

    g_out[h] averages W^h(alpha, .) against mu_t over the grid, g_in[h] uses
    the transposed kernel. alpha may be any point of [0,1], not only a grid
    point, so finite agents at i/N can be bridged to the limit directly.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0,1]")
    mu_t = np.asarray(mu_t, dtype=float)
    if mu_t.ndim != 2 or mu_t.shape[0] != grid.m:
        raise ValueError("mu_t must have shape (M, X)")
    pts = grid.points
    kout = np.stack([W.kernels[h](alpha, pts) for h in range(W.k)])
    kin = np.stack([W.kernels[h](pts, alpha) for h in range(W.k)])
    g_out = kout @ mu_t / grid.m
    g_in = kin @ mu_t / grid.m
    return NeighborhoodAggregate.from_color_masses(g_out, g_in, schedule, t)


def _propagate(env: Environment, schedule: ColorWeightSchedule, pi: np.ndarray,
               kmats: np.ndarray, grid: IndexGrid):
    """Run the forward recursion; also returns the per-step weighted fields."""
    horizon = pi.shape[0]
    m, nx = grid.m, env.n_states
    mu = np.empty((horizon + 1, m, nx))
    mu[0] = env.mu0
    wins = np.empty((horizon, m, nx))
    wouts = np.empty((horizon, m, nx))
    for t in range(horizon):
        win, wout = _weighted_fields(kmats, schedule, mu[t], t)
        wins[t], wouts[t] = win, wout
        tensors = env.transition_tensors(win, wout, t)
        mu[t + 1] = np.einsum("mx,mxu,mxuy->my", mu[t], pi[t], tensors)
    return mu, wins, wouts


def forward(env: Environment, W: KDigraphon, schedule: ColorWeightSchedule,
            pi: PolicyEnsemble, kernels: np.ndarray | None = None) -> MeanFieldEnsemble:
    """The forward map: mean-field ensemble induced by a policy ensemble.

    Starts every index at mu0 and applies the one-step recursion with the
    neighborhood fields recomputed from the current slice at each step.
    """
    if pi.horizon != env.horizon:
        raise ValueError(f"policy horizon {pi.horizon} != environment horizon {env.horizon}")
    if pi.pi.shape[2] != env.n_states or pi.pi.shape[3] != env.n_actions:
        raise ValueError("policy state/action dimensions do not match the environment")
    kmats = kernels if kernels is not None else kernel_matrices(W, pi.grid)
    mu, _, _ = _propagate(env, schedule, pi.pi, kmats, pi.grid)
    return MeanFieldEnsemble(pi.grid, mu)
