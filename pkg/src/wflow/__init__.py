"""Wasserstein distance dynamics for one-dimensional jump processes.

The package computes exact one-dimensional optimal transport quantities
(distances, maps, dual potentials), solves finite-state pure jump processes by
uniformization with genuine-jump layer decompositions, certifies contraction
and moment inequalities for birth-death chains, and approximates
piecewise-deterministic Markov processes by pure jump chains.
"""

from wflow.measures import (
    CoverageError,
    DiscreteMeasure,
    GridMeasure,
    TailConstants,
    UnboundableError,
    generalized_variance,
    laplace_smooth,
    measure_from_csv,
    measure_to_csv,
    moment,
    quantile,
    tail_ratio_constants,
)
from wflow.jump_process import (
    JumpGeneratorSpec,
    KernelMomentBound,
    LayerInequalityReport,
    LayerStack,
    kernel_moment_bound,
    kernel_moment_constant,
    kernel_moment_constant_limit,
    layer_inequality_report,
    layer_stack,
    moment_growth_bound,
    simulate_paths,
    uniformized_marginal,
)
from wflow.transport import (
    HypothesisError,
    IntegrationError,
    PotentialConstructionError,
    PotentialPair,
    RepresentationError,
    TransportMap,
    TranslatedMapBound,
    duality_gap,
    feasibility_violation,
    optimal_map,
    potential_moment_bound,
    potentials,
    translated_map_bound,
    wasserstein,
    wasserstein_power,
)
from wflow.evolution import (
    EvolutionReport,
    apply_generator,
    rhs_integrand,
    verify_identity,
)
from wflow.pdmp import (
    MuApproximation,
    MuConvergenceReport,
    PdmpSpec,
    ShiftJump,
    UniformJump,
    atomize,
    cell_law,
    embed_on_grid,
    flow,
    mu_convergence_study,
    mu_generator,
    named_drift,
    propagation_check,
    propagation_constants,
    simulate_chain,
    simulate_pdmp,
)
from wflow.birth_death import (
    BirthDeathSpec,
    ContractionReport,
    const_birth_linear_death,
    contraction_report,
    cost_difference_constant,
    curvature,
    mm_infty,
    moment_bound,
    moment_rate_constant,
    truncated_curvature,
)

__version__ = "0.1.0"

__all__ = [
    "CoverageError",
    "DiscreteMeasure",
    "GridMeasure",
    "MuApproximation",
    "MuConvergenceReport",
    "PdmpSpec",
    "ShiftJump",
    "TailConstants",
    "UnboundableError",
    "UniformJump",
    "atomize",
    "cell_law",
    "embed_on_grid",
    "flow",
    "mu_convergence_study",
    "mu_generator",
    "named_drift",
    "propagation_check",
    "propagation_constants",
    "simulate_chain",
    "simulate_pdmp",
    "generalized_variance",
    "laplace_smooth",
    "measure_from_csv",
    "measure_to_csv",
    "moment",
    "quantile",
    "tail_ratio_constants",
    "JumpGeneratorSpec",
    "KernelMomentBound",
    "LayerInequalityReport",
    "LayerStack",
    "kernel_moment_bound",
    "kernel_moment_constant",
    "kernel_moment_constant_limit",
    "layer_inequality_report",
    "layer_stack",
    "moment_growth_bound",
    "simulate_paths",
    "uniformized_marginal",
    "HypothesisError",
    "IntegrationError",
    "PotentialConstructionError",
    "PotentialPair",
    "RepresentationError",
    "TransportMap",
    "TranslatedMapBound",
    "duality_gap",
    "feasibility_violation",
    "optimal_map",
    "potential_moment_bound",
    "potentials",
    "translated_map_bound",
    "wasserstein",
    "wasserstein_power",
    "EvolutionReport",
    "apply_generator",
    "rhs_integrand",
    "verify_identity",
    "BirthDeathSpec",
    "ContractionReport",
    "const_birth_linear_death",
    "contraction_report",
    "cost_difference_constant",
    "curvature",
    "mm_infty",
    "moment_bound",
    "moment_rate_constant",
    "truncated_curvature",
    "__version__",
]
