"""Game environments whose dynamics and rewards read weighted neighborhood fields.

Each environment exposes finite state/action sets, a horizon, an initial
distribution, and transition/reward maps taking a NeighborhoodAggregate. The
hot paths (mean-field propagation, agent simulation) go through the batched
`transition_rows`/`reward_values` methods, which take raw weighted in/out
fields for many agents at once; the scalar `transition`/`reward` methods wrap
the same code path for a single aggregate.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .digraphon import ColorWeightSchedule
from .errors import ConfigError, ModelConsistencyError

NEGATIVE_MASS_TOL = 1e-12


@dataclass(frozen=True)
class NeighborhoodAggregate:
    """Per-color neighbor state masses of one agent plus their weighted sums.

    `g_out[h-1]` / `g_in[h-1]` are unnormalized measures over states (mass at
    most one each); `weighted_out` / `weighted_in` combine them with the
    color strengths of a schedule at time `t`.
    """

    g_out: np.ndarray
    g_in: np.ndarray
    weighted_out: np.ndarray
    weighted_in: np.ndarray
    t: int

    @classmethod
    def from_color_masses(cls, g_out, g_in, schedule: ColorWeightSchedule, t: int):
        g_out = np.asarray(g_out, dtype=float)
        g_in = np.asarray(g_in, dtype=float)
        return cls(
            g_out=g_out,
            g_in=g_in,
            weighted_out=schedule.out_weights(t) @ g_out,
            weighted_in=schedule.in_weights(t) @ g_in,
            t=int(t),
        )

    @classmethod
    def empty(cls, k: int, n_states: int, t: int = 0):
        zero = np.zeros((k, n_states))
        return cls(zero, zero.copy(), np.zeros(n_states), np.zeros(n_states), int(t))


class Environment(ABC):
    """Immutable game primitives; transition and reward evaluation is pure."""

    def __init__(self, states, actions, horizon, mu0, name):
        mu0 = np.asarray(mu0, dtype=float)
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        if mu0.shape != (len(states),):
            raise ValueError("mu0 must have one entry per state")
        if mu0.min() < 0.0 or abs(mu0.sum() - 1.0) > 1e-12:
            raise ValueError("mu0 must be a probability vector")
        self.states = tuple(states)
        self.actions = tuple(actions)
        self.horizon = int(horizon)
        self.mu0 = mu0
        self.name = str(name)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @abstractmethod
    def transition_rows(self, xs, us, weighted_in, weighted_out, t) -> np.ndarray:
        """Next-state distributions, one row per (state, action, field) triple."""

    @abstractmethod
    def reward_values(self, xs, us, weighted_in, weighted_out, t) -> np.ndarray:
        """Per-triple instantaneous rewards."""

    def transition(self, x: int, u: int, agg: NeighborhoodAggregate, t: int) -> np.ndarray:
        self._check_indices(x, u)
        return self.transition_rows(
            np.array([x]), np.array([u]),
            agg.weighted_in[None, :], agg.weighted_out[None, :], t,
        )[0]

    def reward(self, x: int, u: int, agg: NeighborhoodAggregate, t: int) -> float:
        self._check_indices(x, u)
        return float(self.reward_values(
            np.array([x]), np.array([u]),
            agg.weighted_in[None, :], agg.weighted_out[None, :], t,
        )[0])

    def transition_tensor(self, weighted_in, weighted_out, t) -> np.ndarray:
        """All (x, u) transition rows under one shared field, shape (X, U, X)."""
        return self.transition_tensors(
            np.asarray(weighted_in)[None, :], np.asarray(weighted_out)[None, :], t
        )[0]

    def reward_matrix(self, weighted_in, weighted_out, t) -> np.ndarray:
        return self.reward_matrices(
            np.asarray(weighted_in)[None, :], np.asarray(weighted_out)[None, :], t
        )[0]

    def transition_tensors(self, weighted_in, weighted_out, t) -> np.ndarray:
        """Transition rows for every (x, u) pair under B fields, shape (B, X, U, X)."""
        xs, us, win, wout = self._pair_grid(weighted_in, weighted_out)
        rows = self.transition_rows(xs, us, win, wout, t)
        b = weighted_in.shape[0]
        return rows.reshape(b, self.n_states, self.n_actions, self.n_states)

    def reward_matrices(self, weighted_in, weighted_out, t) -> np.ndarray:
        xs, us, win, wout = self._pair_grid(weighted_in, weighted_out)
        vals = self.reward_values(xs, us, win, wout, t)
        return vals.reshape(weighted_in.shape[0], self.n_states, self.n_actions)

    def _pair_grid(self, weighted_in, weighted_out):
        nx, nu = self.n_states, self.n_actions
        b = weighted_in.shape[0]
        xs = np.tile(np.repeat(np.arange(nx), nu), b)
        us = np.tile(np.arange(nu), nx * b)
        win = np.repeat(weighted_in, nx * nu, axis=0)
        wout = np.repeat(weighted_out, nx * nu, axis=0)
        return xs, us, win, wout

    def _check_indices(self, x, u):
        if not 0 <= x < self.n_states:
            raise ValueError(f"state index {x} outside 0..{self.n_states - 1}")
        if not 0 <= u < self.n_actions:
            raise ValueError(f"action index {u} outside 0..{self.n_actions - 1}")


class MatrixEnvironment(Environment):
    """Environment with fixed tabular dynamics, independent of the graph.

    Useful as a sanity baseline: with no field dependence, the mean-field
    best response is an ordinary finite-horizon MDP solution.
    """

    def __init__(self, states, actions, horizon, mu0, transitions, rewards, name="matrix"):
        super().__init__(states, actions, horizon, mu0, name)
        transitions = np.asarray(transitions, dtype=float)
        rewards = np.asarray(rewards, dtype=float)
        nx, nu = self.n_states, self.n_actions
        if transitions.shape != (nx, nu, nx):
            raise ValueError("transitions must have shape (X, U, X)")
        if rewards.shape != (nx, nu):
            raise ValueError("rewards must have shape (X, U)")
        if transitions.min() < 0 or np.abs(transitions.sum(axis=2) - 1.0).max() > 1e-12:
            raise ValueError("transition rows must be probability vectors")
        self._transitions = transitions
        self._rewards = rewards

    def transition_rows(self, xs, us, weighted_in, weighted_out, t):
        return self._transitions[xs, us]

    def reward_values(self, xs, us, weighted_in, weighted_out, t):
        return self._rewards[xs, us]


class SisEnvironment(Environment):
    """Susceptible/infected epidemic with a costly protection action.

    Infection pressure is the weighted incoming mass on the infected state;
    protected agents cannot be infected. The adaptive variant doubles the
    base infection rate. All constructed probabilities are clamped to [0,1].
    """

    STATE_S, STATE_I = 0, 1
    ACT_OPEN, ACT_PROTECT = 0, 1

    def __init__(self, adaptive=False, horizon=50, initial_infected=0.5,
                 infection_cost=2.0, protect_cost=0.5, recovery_prob=0.2,
                 infection_rate=None):
        name = "sis-adaptive" if adaptive else "sis"
        super().__init__(("S", "I"), ("no-protect", "protect"), horizon,
                         (1.0 - initial_infected, initial_infected), name)
        self.adaptive = bool(adaptive)
        self.infection_cost = float(infection_cost)
        self.protect_cost = float(protect_cost)
        self.recovery_prob = float(recovery_prob)
        self.infection_rate = float(
            infection_rate if infection_rate is not None else (1.6 if adaptive else 0.8)
        )
        if not 0.0 <= self.recovery_prob <= 1.0:
            raise ValueError("recovery_prob must lie in [0,1]")

    def transition_rows(self, xs, us, weighted_in, weighted_out, t):
        xs = np.asarray(xs)
        us = np.asarray(us)
        p_inf = np.clip(
            self.infection_rate * weighted_in[:, self.STATE_I] * (us == self.ACT_OPEN),
            0.0, 1.0,
        )
        rows = np.empty((xs.shape[0], 2))
        infected = xs == self.STATE_I
        rows[:, self.STATE_S] = np.where(infected, self.recovery_prob, 1.0 - p_inf)
        rows[:, self.STATE_I] = np.where(infected, 1.0 - self.recovery_prob, p_inf)
        return rows

    def reward_values(self, xs, us, weighted_in, weighted_out, t):
        xs = np.asarray(xs)
        us = np.asarray(us)
        return (-self.infection_cost * (xs == self.STATE_I)
                - self.protect_cost * (us == self.ACT_PROTECT))


def sis_env(adaptive: bool = False, **overrides) -> SisEnvironment:
    return SisEnvironment(adaptive=adaptive, **overrides)


class BeachEnvironment(Environment):
    """Agents on a line of positions balancing bar proximity against crowding.

    Movement and distance from the bar are costs, as is the weighted incoming
    mass at the agent's own position. Moves are clamped to the strip, then
    position noise of +-1 (probability `noise_prob` each) applies and is
    clamped again.
    """

    MOVES = (-1, 0, 1)

    def __init__(self, horizon=30, n_positions=10, bar=5, noise_prob=0.05,
                 distance_weight=0.2, move_weight=0.2):
        if not 0 <= bar < n_positions:
            raise ValueError("bar must be one of the positions")
        if not 0.0 <= noise_prob <= 0.5:
            raise ValueError("noise_prob must lie in [0, 0.5]")
        states = tuple(str(i) for i in range(n_positions))
        super().__init__(states, ("left", "stay", "right"), horizon,
                         np.full(n_positions, 1.0 / n_positions), "beach")
        self.bar = int(bar)
        self.noise_prob = float(noise_prob)
        self.distance_weight = float(distance_weight)
        self.move_weight = float(move_weight)
        self._tensor = self._build_tensor(n_positions)

    def _build_tensor(self, n):
        tensor = np.zeros((n, len(self.MOVES), n))
        noise = ((-1, self.noise_prob), (0, 1.0 - 2.0 * self.noise_prob), (1, self.noise_prob))
        for x in range(n):
            for u, move in enumerate(self.MOVES):
                target = min(max(x + move, 0), n - 1)
                for eps, p in noise:
                    tensor[x, u, min(max(target + eps, 0), n - 1)] += p
        return tensor

    def transition_rows(self, xs, us, weighted_in, weighted_out, t):
        return self._tensor[np.asarray(xs), np.asarray(us)]

    def reward_values(self, xs, us, weighted_in, weighted_out, t):
        xs = np.asarray(xs)
        moves = np.asarray(self.MOVES)[np.asarray(us)]
        crowding = weighted_in[np.arange(xs.shape[0]), xs]
        return (-self.distance_weight * np.abs(self.bar - xs)
                - self.move_weight * np.abs(moves) - crowding)


def beach_env(**overrides) -> BeachEnvironment:
    return BeachEnvironment(**overrides)


@dataclass(frozen=True)
class SystemicRiskParams:
    """Constants of the interbank lending game.

    beta is the external shock parameter, lam the action mixing rate, k_h and
    k_b the per-step costs of the high-capital and bankrupt states, xi the
    capital endowments and w the state weights entering the liquidity, both
    ordered (high, low, bankrupt).
    """

    beta: float = 0.6
    lam: float = 0.1
    k_h: float = 0.04
    k_b: float = 0.4
    xi: tuple[float, float, float] = (1.0, 0.0, -1.0)
    w: tuple[float, float, float] = (1.0, 0.0, -1.0)

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly in (0,1)")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0,1]")
        if not self.k_b > self.k_h > 0.0:
            raise ValueError("costs must satisfy k_b > k_h > 0")
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))
        object.__setattr__(self, "w", tuple(float(v) for v in self.w))


def liquidity(x: int, agg: NeighborhoodAggregate, params: SystemicRiskParams):
    """Liquidity of a bank in state x and its clamp to [-1, 1].

    Incoming weighted mass counts with the state weights w, outgoing weighted
    mass against 3 - w; the weights act as loan amounts.
    """
    w = np.asarray(params.w)
    c = params.xi[x] + float(agg.weighted_in @ w - agg.weighted_out @ (3.0 - w))
    return c, min(1.0, max(-1.0, c))


def _action_matrices(sigma: np.ndarray, params: SystemicRiskParams) -> np.ndarray:
    """Transition matrices for keep/raise/decrease; sigma has one clamped
    liquidity per row state, shape (B, 3). Returns shape (B, U, X, X)."""
    beta, lam = params.beta, params.lam
    b = sigma.shape[0]
    keep = np.empty((b, 3, 3))
    keep[:, :, 0] = (1.0 + sigma) / 4.0
    keep[:, :, 1] = (1.0 - 0.25 * sigma) / 4.0
    keep[:, :, 2] = (2.0 - 0.75 * sigma) / 4.0
    keep[:, 0, 1] += beta / 4.0
    keep[:, 0, 2] -= beta / 4.0

    shift = np.array([0.0, beta, -beta])
    raise_ = keep.copy()
    raise_[:, 1] = (1.0 - lam) * keep[:, 1] + lam * (keep[:, 0] - shift)
    raise_[:, 2] = (1.0 - lam) * keep[:, 2] + lam * keep[:, 1]

    decrease = keep.copy()
    decrease[:, 1] = (1.0 - lam) * keep[:, 1] + lam * keep[:, 2]
    # the high row mixes in the already-built decrease low row
    decrease[:, 0] = (1.0 - lam) * keep[:, 0] + lam * (decrease[:, 1] + shift)
    return np.stack([keep, raise_, decrease], axis=1)


def _checked_rows(rows: np.ndarray, context: str) -> np.ndarray:
    low = rows.min()
    if low < -NEGATIVE_MASS_TOL:
        raise ModelConsistencyError(
            f"negative transition mass {low:.3e} in {context}; "
            "the (beta, lam) combination is outside the model's valid range"
        )
    if low < 0.0:
        rows = np.where(rows < 0.0, 0.0, rows)
    return rows


def systemic_transition_row(x: int, u: int, sigma_by_state, params: SystemicRiskParams) -> np.ndarray:
    """One transition row of the lending game given the three clamped liquidities."""
    sigma = np.asarray(sigma_by_state, dtype=float)
    if sigma.shape != (3,):
        raise ValueError("need one clamped liquidity per state")
    if sigma.min() < -1.0 or sigma.max() > 1.0:
        raise ValueError("clamped liquidities must lie in [-1,1]")
    mats = _action_matrices(sigma[None, :], params)
    row = _checked_rows(mats[0, u, x], f"action {u}, state {x}")
    return row


class SystemicRiskEnvironment(Environment):
    """Interbank lending game over high/low/bankrupt capital states."""

    def __init__(self, adaptive=False, horizon=50, mu0=(0.5, 0.5, 0.0),
                 params: SystemicRiskParams | None = None):
        name = "systemic-risk-adaptive" if adaptive else "systemic-risk"
        super().__init__(("h", "l", "b"), ("keep", "raise", "decrease"), horizon, mu0, name)
        self.adaptive = bool(adaptive)
        self.params = params if params is not None else SystemicRiskParams()
        self._w = np.asarray(self.params.w)
        self._xi = np.asarray(self.params.xi)

    def sigma_by_state(self, weighted_in, weighted_out) -> np.ndarray:
        """Clamped liquidities of all three states under the given fields, (B, 3)."""
        net = weighted_in @ self._w - weighted_out @ (3.0 - self._w)
        return np.clip(net[:, None] + self._xi[None, :], -1.0, 1.0)

    def transition_rows(self, xs, us, weighted_in, weighted_out, t):
        xs = np.asarray(xs)
        us = np.asarray(us)
        sigma = self.sigma_by_state(weighted_in, weighted_out)
        mats = _action_matrices(sigma, self.params)
        rows = mats[np.arange(xs.shape[0]), us, xs]
        return _checked_rows(rows, self.name)

    def reward_values(self, xs, us, weighted_in, weighted_out, t):
        xs = np.asarray(xs)
        return -(self.params.k_h * (xs == 0) + self.params.k_b * (xs == 2))


def systemic_risk_env(adaptive: bool = False, **overrides) -> SystemicRiskEnvironment:
    return SystemicRiskEnvironment(adaptive=adaptive, **overrides)


class _AdaptiveWindowWeights:
    """Strength 1 for color h on [(h-2)T/2, (h-1)T/2), 0 otherwise; color 1 never active.

    The active windows are half-open on the right so that color 2 covers t=0
    and color 3 takes over exactly at t = T/2.
    """

    def __init__(self, horizon: int):
        self.horizon = int(horizon)

    def __call__(self, h, t):
        if h == 1:
            return 0.0
        lo = (h - 2) * self.horizon / 2.0
        hi = (h - 1) * self.horizon / 2.0
        return 1.0 if lo <= t < hi else 0.0


def adaptive_schedule(horizon: int, k: int = 3) -> ColorWeightSchedule:
    """Schedule that switches the single active color from 2 to 3 at t = T/2."""
    if k != 3:
        raise ValueError("the adaptive schedule is defined for 3-color scenarios")
    fn = _AdaptiveWindowWeights(horizon)
    return ColorWeightSchedule(k=k, out_fn=fn, in_fn=fn,
                               description=f"windowed colors, switch at t={horizon / 2:g}")


ENVIRONMENT_NAMES = ("sis", "sis-adaptive", "beach", "systemic-risk", "systemic-risk-adaptive")

_SYSTEMIC_PARAM_KEYS = {"beta", "lambda", "k_h", "k_b", "xi", "w"}


def _build_systemic(adaptive, overrides):
    params_kw = {}
    env_kw = {}
    for key, value in overrides.items():
        if key in _SYSTEMIC_PARAM_KEYS:
            params_kw["lam" if key == "lambda" else key] = value
        elif key in ("horizon", "mu0"):
            env_kw[key] = value
        else:
            raise ConfigError(f"unknown systemic-risk parameter {key!r}")
    try:
        params = SystemicRiskParams(**params_kw)
        return SystemicRiskEnvironment(adaptive=adaptive, params=params, **env_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def from_name(name: str, **overrides) -> Environment:
    """Build an environment by its configuration name, with parameter overrides."""
    try:
        if name == "sis":
            return sis_env(False, **overrides)
        if name == "sis-adaptive":
            return sis_env(True, **overrides)
        if name == "beach":
            return beach_env(**overrides)
        if name == "systemic-risk":
            return _build_systemic(False, overrides)
        if name == "systemic-risk-adaptive":
            return _build_systemic(True, overrides)
    except TypeError:
        bad = set(overrides) - set()
        raise ConfigError(f"invalid parameters {sorted(bad)} for environment {name!r}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(
        f"unknown environment {name!r}; known: {', '.join(ENVIRONMENT_NAMES)}"
    )
