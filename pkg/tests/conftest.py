"""Shared test environments."""

import numpy as np
import pytest

from digraphon_mfg.environments import Environment, MatrixEnvironment


class MixtureEnv(Environment):
    """Randomized field-coupled test environment.

    Transitions mix two fixed stochastic kernels with a weight that depends
    on the incoming and outgoing fields, so every component of the forward
    recursion matters. Rewards couple linearly to the incoming field.
    """

    def __init__(self, seed, n_states=3, n_actions=2, horizon=3):
        rng = np.random.default_rng(seed)
        mu0 = rng.dirichlet(np.ones(n_states))
        states = tuple(f"s{i}" for i in range(n_states))
        actions = tuple(f"a{i}" for i in range(n_actions))
        super().__init__(states, actions, horizon, mu0, f"mixture-{seed}")
        self.p0 = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
        self.p1 = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
        self.r0 = rng.normal(size=(n_states, n_actions))
        self.b_in = rng.uniform(0.0, 0.4, size=n_states)
        self.b_out = rng.uniform(0.0, 0.4, size=n_states)
        self.d = rng.normal(size=n_states)

    def transition_rows(self, xs, us, weighted_in, weighted_out, t):
        w = np.clip(weighted_in @ self.b_in + weighted_out @ self.b_out, 0.0, 1.0)
        return (1.0 - w)[:, None] * self.p0[xs, us] + w[:, None] * self.p1[xs, us]

    def reward_values(self, xs, us, weighted_in, weighted_out, t):
        return self.r0[xs, us] + weighted_in @ self.d


def identity_env(n_states=2, n_actions=2, horizon=4, mu0=None):
    """Transitions keep the state regardless of action or field."""
    if mu0 is None:
        mu0 = np.full(n_states, 1.0 / n_states)
    transitions = np.zeros((n_states, n_actions, n_states))
    for x in range(n_states):
        transitions[x, :, x] = 1.0
    rewards = np.zeros((n_states, n_actions))
    return MatrixEnvironment(
        tuple(f"s{i}" for i in range(n_states)),
        tuple(f"a{i}" for i in range(n_actions)),
        horizon, mu0, transitions, rewards, name="identity",
    )


def single_state_env(horizon=5, reward=-1.0):
    return MatrixEnvironment(
        ("only",), ("go",), horizon, (1.0,),
        np.ones((1, 1, 1)), np.full((1, 1), reward), name="single-state",
    )


def random_matrix_env(seed, n_states=2, n_actions=2, horizon=3):
    rng = np.random.default_rng(seed)
    return MatrixEnvironment(
        tuple(f"s{i}" for i in range(n_states)),
        tuple(f"a{i}" for i in range(n_actions)),
        horizon,
        rng.dirichlet(np.ones(n_states)),
        rng.dirichlet(np.ones(n_states), size=(n_states, n_actions)),
        rng.normal(size=(n_states, n_actions)),
        name=f"random-{seed}",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
