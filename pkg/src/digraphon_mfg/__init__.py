"""Numerical laboratory for mean field games on k-colored digraphons.

Construct and sample colored digraphons, solve for mean-field equilibria by
online mirror descent on a discretized index grid, and validate the limit
model against finite-agent simulations on sampled graphs.
"""

from .digraphon import (
    ColorWeightSchedule,
    KDigraphon,
    SampledColoredDigraph,
    builtin,
    constant_schedule,
    cut_norm_estimate,
    sample_graph,
    step_digraphon,
)
from .environments import (
    BeachEnvironment,
    Environment,
    MatrixEnvironment,
    NeighborhoodAggregate,
    SisEnvironment,
    SystemicRiskEnvironment,
    SystemicRiskParams,
    adaptive_schedule,
    beach_env,
    from_name,
    liquidity,
    sis_env,
    systemic_risk_env,
    systemic_transition_row,
)
from .errors import ConfigError, ModelConsistencyError
from .finite_sim import (
    AgentPolicySet,
    ConvergenceRecord,
    GapRecord,
    GapReport,
    SimulationBatch,
    SimulationRun,
    delta_mu,
    deviation_gap,
    discretize_policy,
    empirical_neighborhood,
    simulate,
    simulate_batch,
)
from .meanfield import (
    IndexGrid,
    MeanFieldEnsemble,
    PolicyEnsemble,
    forward,
    kernel_matrices,
    neighborhood,
)
from .solver import QTable, SolveReport, best_response, exploitability, q_values, solve_omd

__version__ = "0.1.0"
