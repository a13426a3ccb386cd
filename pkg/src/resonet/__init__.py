"""Resonance-attack vulnerability analysis and mitigation for networks.

Networks with second-order Laplacian signal dynamics resonate when forced
near a natural frequency. This package quantifies the expected squared
steady-state amplitude under a stochastic resonance attacker and reduces it
two ways: re-allocating the network's own edge weights, or attaching and
tuning an auxiliary damping network. Closed forms are cross-validated
against Monte Carlo, quadrature, and direct ODE simulation.
"""

from ._kernels import NUMBA_ENABLED
from .attack import AttackModel, ForcingSample, mixture_pdf, sample_attack, \
    sample_frequency, sample_unit_vector
from .absorber import AbsorberProblem, RationalIntegrand, \
    absorber_problem_from_system, complete_aux, coupled_pair_integral, \
    coupled_pair_integral_quad, coupled_vulnerability, damping_sweep, \
    linearized_roots, mirrored_aux, mode_response
from .errors import ConvergenceError, DegenerateRootsError, FeasibilityError, \
    GraphFormatError, QuadratureError, ResonetError
from .graph_core import DynamicsParams, WeightedGraph, dump_edge_list, \
    ego_subgraph, graph_from_json, graph_to_json, is_connected, laplacian, \
    load_edge_list, random_complete_graph, random_incomplete_graph, stiffness
from .optimize import OptOptions, OptResult, StudyBase, optimize_absorber, \
    optimize_weights, param_study, percent_decrease, project_absorber, \
    project_weights
from .response import AmplitudeTrace, CombinedSystem, MainSystem, \
    integrate_forced, monte_carlo_vulnerability, simulate_dynamics, \
    steady_state, steady_state_combined
from .rng import make_rng
from .spectral import EigenDecomposition, SpectrumReport, natural_frequencies, \
    spectrum_histogram, sym_eig
from .vulnerability import WeightProblem, pair_integral_closed, \
    pair_integral_quad, vulnerability, vulnerability_from_frequencies, \
    vulnerability_gradient

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
