"""Distributed weight design for fast average consensus.

Agents on an undirected graph compute, by neighbor-local message
passing, the weights that make the linear averaging protocol contract
as fast as the centralized optimum allows; the package also ships that
centralized reference solver, the protocol simulator (including the
live mode where weights are computed while consensus is running and
agents join dynamically), and an experiment harness with a CLI.
"""

from .admm import (AdmmConfig, AgentState, ResidualReport, SerialState,
                   augmented_lagrangian, parallel_round, residuals,
                   run_until_stop, serial_round, stopping_satisfied,
                   zero_states)
from .centralized import (CentralSolution, minimize_convergence_factor,
                          verify_solution)
from .consensus import (Arrival, LiveEvent, LiveRun, ProtocolRun,
                        live_convergence_factor_trace, metropolis_row_states,
                        min_symmetrize, run_admm_live, run_metropolis_live,
                        run_protocol, stack_agent_rows)
from .graph import (Graph, add_agents, er_random, from_edge_list,
                    is_connected, read_graph, write_graph)
from .harness import (ExperimentSpec, run_fixed, run_live, run_sweep)
from .spectral import (ConvergenceError, averaging_matrix, frobenius_norm,
                       project_feasible, prox_spectral_norm, spectral_norm,
                       spectral_radius, svd)
from .subproblem import (PrimalInstance, SolveReport, primal_objective,
                         smooth_gradient, solve_primal)
from .weights import (ConsensusCheck, WeightMatrix, assemble_from_rows,
                      check_consensus_condition, convergence_factor,
                      is_primitive, load_weight_csv, metropolis,
                      save_weight_csv)

__version__ = "0.1.0"
