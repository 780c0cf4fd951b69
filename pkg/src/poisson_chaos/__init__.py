"""Simulation and verification toolkit for Poisson U-statistics and
multiple stochastic integrals: exact chaos-expansion identities,
partition-indexed tensor norms, concentration-bound evaluation,
Gilbert-graph subgraph counts, and seeded Monte Carlo campaigns."""

from .errors import ConfigurationError, PoissonChaosError, SizeError
from .point_process import (
    MarkedSample,
    SpaceConfig,
    SpatioTemporalSample,
    mark_sample,
    restrict,
    sample_process,
)
from .kernels import (
    DiscreteKernel,
    Grid,
    StepKernel,
    discretize,
    l2_norm_sq,
    mean_coefficient,
    project_kernel,
    symmetrize,
    to_step,
)
from .chaos import (
    ChaosDecomposition,
    chaos_expand,
    chaos_identity_residual,
    multiple_integral,
    ustat,
    ustat_mean,
    ustat_variance,
    wiener_ito_step,
)
from .norms import (
    NormTable,
    Partition,
    build_norm_table,
    brute_force_norm,
    conditional_norm_sup,
    partition_norm,
    subgraph_bound_quantities,
)
from .bounds import (
    BoundSpec,
    ClusterSet,
    integral_moment_bound,
    integral_tail_bound,
    lil_cluster_set,
    ou_bound,
    polynomial_tail_bound,
    power_length_bound,
    simplified_tail_bound,
    subgraph_tail_bound,
    ustat_tail_bound,
)
from .geometry import (
    GeometricGraph,
    GraphPattern,
    automorphism_count,
    build_gilbert_graph,
    count_subgraphs,
)
from .experiments import (
    ExperimentPlan,
    decoupling_check,
    empirical_tail,
    lil_trajectory,
    maximal_inequality_check,
    variance_check,
    wilson_interval,
)

__version__ = "0.1.0"
