"""Experiment configuration: strict YAML schema and scenario assembly.

A config is a key tree; unknown keys are rejected with their full path so a
misspelled key can never fall back to a silent default. A minimal config
names only the scenario:

    scenario:
      env: sis
      digraphon: rotated-uniform

Everything else (solver and simulation settings, seed, output directory)
defaults to the values below.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import environments
from .digraphon import KDigraphon, builtin, constant_schedule
from .environments import Environment, adaptive_schedule
from .errors import ConfigError


@dataclass
class ScenarioConfig:
    env: str = ""
    digraphon: str = ""
    adaptive: bool = False
    params: dict = field(default_factory=dict)


@dataclass
class SolverConfig:
    grid: int = 50
    iterations: int = 100
    learning_rate: float = 0.1
    probe_interval: int = 1


@dataclass
class SimConfig:
    n_list: list = field(default_factory=lambda: [4, 16, 64, 256])
    samples: int = 100
    deviation_agents: int = 10
    deviation_runs: int = 200
    gap_n: int = 100
    graph_n: int = 50


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int = 0
    output: str = "out"


def _require_map(value, path):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return value


def _get_int(mapping, key, path, default, minimum):
    value = mapping.pop(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    if value < minimum:
        raise ConfigError(f"{path}.{key}: must be at least {minimum}")
    return value


def _get_float(mapping, key, path, default, minimum_exclusive):
    value = mapping.pop(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    if value <= minimum_exclusive:
        raise ConfigError(f"{path}.{key}: must be greater than {minimum_exclusive}")
    return float(value)


def _get_str(mapping, key, path, default=None):
    value = mapping.pop(key, default)
    if value is None:
        raise ConfigError(f"{path}.{key}: required key is missing")
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}: expected a string")
    return value


def _get_bool(mapping, key, path, default):
    value = mapping.pop(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected true or false")
    return value


def _reject_unknown(mapping, path):
    if mapping:
        key = sorted(mapping)[0]
        raise ConfigError(f"{path}.{key}: unknown key")


def parse_config(data: dict) -> ExperimentConfig:
    data = dict(_require_map(data, "config"))
    cfg = ExperimentConfig()

    scenario = dict(_require_map(data.pop("scenario", None), "scenario"))
    cfg.scenario.env = _get_str(scenario, "env", "scenario")
    cfg.scenario.digraphon = _get_str(scenario, "digraphon", "scenario")
    cfg.scenario.adaptive = _get_bool(scenario, "adaptive", "scenario",
                                      cfg.scenario.env.endswith("-adaptive"))
    params = _require_map(scenario.pop("params", None), "scenario.params")
    if not all(isinstance(k, str) for k in params):
        raise ConfigError("scenario.params: keys must be strings")
    cfg.scenario.params = dict(params)
    _reject_unknown(scenario, "scenario")

    solver = dict(_require_map(data.pop("solver", None), "solver"))
    cfg.solver.grid = _get_int(solver, "grid", "solver", cfg.solver.grid, 1)
    cfg.solver.iterations = _get_int(solver, "iterations", "solver", cfg.solver.iterations, 1)
    cfg.solver.learning_rate = _get_float(solver, "learning_rate", "solver",
                                          cfg.solver.learning_rate, 0.0)
    cfg.solver.probe_interval = _get_int(solver, "probe_interval", "solver",
                                         cfg.solver.probe_interval, 1)
    _reject_unknown(solver, "solver")

    sim = dict(_require_map(data.pop("sim", None), "sim"))
    n_list = sim.pop("n_list", cfg.sim.n_list)
    if (not isinstance(n_list, list) or not n_list
            or any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in n_list)):
        raise ConfigError("sim.n_list: expected a non-empty list of positive integers")
    cfg.sim.n_list = list(n_list)
    cfg.sim.samples = _get_int(sim, "samples", "sim", cfg.sim.samples, 2)
    cfg.sim.deviation_agents = _get_int(sim, "deviation_agents", "sim",
                                        cfg.sim.deviation_agents, 1)
    cfg.sim.deviation_runs = _get_int(sim, "deviation_runs", "sim", cfg.sim.deviation_runs, 2)
    cfg.sim.gap_n = _get_int(sim, "gap_n", "sim", cfg.sim.gap_n, 1)
    cfg.sim.graph_n = _get_int(sim, "graph_n", "sim", cfg.sim.graph_n, 1)
    _reject_unknown(sim, "sim")

    cfg.seed = _get_int(data, "seed", "config", cfg.seed, 0)
    output = data.pop("output", cfg.output)
    if not isinstance(output, str):
        raise ConfigError("config.output: expected a string")
    cfg.output = output
    _reject_unknown(data, "config")

    _check_scenario(cfg.scenario)
    return cfg


def _check_scenario(scenario: ScenarioConfig) -> None:
    if scenario.env not in environments.ENVIRONMENT_NAMES:
        raise ConfigError(
            f"scenario.env: unknown environment {scenario.env!r}; "
            f"known: {', '.join(environments.ENVIRONMENT_NAMES)}"
        )
    suffixed = scenario.env.endswith("-adaptive")
    if suffixed and not scenario.adaptive:
        raise ConfigError("scenario.adaptive: false contradicts the -adaptive environment name")
    if scenario.adaptive and not suffixed:
        if scenario.env == "beach":
            raise ConfigError("scenario.adaptive: the beach environment has no adaptive variant")
        scenario.env = scenario.env + "-adaptive"


def load_config(path, seed: int | None = None, output: str | None = None) -> ExperimentConfig:
    """Load and validate a YAML config file, with optional CLI overrides."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    try:
        with open(path) as handle:
            data = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    cfg = parse_config(data if data is not None else {})
    if seed is not None:
        if seed < 0:
            raise ConfigError("seed: must be nonnegative")
        cfg.seed = seed
    if output is not None:
        cfg.output = output
    return cfg


def build_scenario(cfg: ExperimentConfig):
    """Assemble the (environment, digraphon, schedule) triple of a config."""
    env = environments.from_name(cfg.scenario.env, **cfg.scenario.params)
    W = builtin(cfg.scenario.digraphon)
    if cfg.scenario.adaptive:
        try:
            schedule = adaptive_schedule(env.horizon, W.k)
        except ValueError as exc:
            raise ConfigError(f"scenario.digraphon: {exc}") from None
    else:
        schedule = constant_schedule(W.k)
    return env, W, schedule
