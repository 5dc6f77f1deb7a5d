"""Diffusion Bayesian estimation of Gaussian regression parameters over ad-hoc networks.

Each node of an undirected network recursively estimates shared regression
parameters from its closed neighbourhood's observations (incremental
update) and its neighbours' estimates (spatial update), using
normal-inverse-gamma conjugate statistics. A seeded simulator compares the
diffusion pipeline against non-cooperative and centralized baselines.
"""

__version__ = "0.1.0"

from .diffusion import (
    DiffusionConfig,
    NodeState,
    incremental_phase,
    incremental_update,
    init_node_states,
    network_step,
    spatial_phase,
    spatial_statistic_average,
    spatial_update,
)
from .errors import (
    ConfigError,
    DegenerateUpdateError,
    DiffBayesError,
    IncompleteNeighbourhoodError,
    InvalidNodeError,
    InvalidObservationError,
    InvalidParameterError,
    InvalidStatisticsError,
    InvalidWeightsError,
    NumericalError,
    SingularStatisticsError,
    TopologyError,
)
from .graph import (
    NeighbourWeights,
    Network,
    TopologySpec,
    build_network,
    is_connected,
    metropolis_weights,
    parse_edge_list,
    random_geometric,
    relative_degree_variance_weights,
    relative_degree_weights,
    uniform_weights,
    weights_by_strategy,
)
from .nig import (
    NigCForm,
    NigVForm,
    Observation,
    bayes_update,
    cform_rank_one_update,
    compose,
    estimate_noise_variance,
    nig_init,
    point_estimate_theta,
    reparameterize,
    residual_scalar,
    sherman_morrison,
    vform_from_text,
    vform_to_text,
)
from .sim import (
    MetricsRow,
    Scenario,
    compute_msd,
    generate_step_data,
    run_centralized,
    run_diffusion,
    run_noncooperative,
    run_scenario,
    scenario_network,
    scenario_weights,
    seed_batch,
)
