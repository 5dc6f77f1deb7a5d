"""Per-node diffusion estimator and the network-wide two-phase step.

Each time step has barrier semantics: first every node folds its closed
neighbourhood's fresh observations into its own statistics (incremental
phase), then every node combines its neighbours' phase-one outputs
(spatial phase). Nodes never read another node's in-progress state; both
phases operate on immutable snapshots, so results are independent of the
order nodes are processed in.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from . import nig
from .errors import (
    ConfigError,
    DiffBayesError,
    IncompleteNeighbourhoodError,
    InvalidWeightsError,
)
from .graph import NeighbourWeights, Network

WEIGHT_SUM_TOL = 1e-9

SPATIAL_MODES = ("estimate-combination", "statistic-averaging", "off")
INCREMENTAL_MODES = ("neighbourhood", "self-only")
FORMS = ("v", "c")


@dataclass(frozen=True)
class NodeState:
    """One node's estimator state.

    stats is the canonical extended-information form; cstats, when kept,
    mirrors it in the reparameterized form and is updated by the
    inversion-free recursion.
    """

    id: int
    stats: nig.NigVForm
    theta_hat: np.ndarray
    sigma2_hat: float
    cstats: nig.NigCForm | None = None


@dataclass(frozen=True)
class DiffusionConfig:
    """Weights and mode switches for one network run.

    form selects which representation drives the reported estimates:
    "v" solves the extended matrix, "c" runs the sequential rank-one
    recursion on the mirrored statistics.
    """

    incremental_weights: NeighbourWeights
    spatial_weights: NeighbourWeights
    spatial_mode: str = "estimate-combination"
    incremental_mode: str = "neighbourhood"
    form: str = "v"

    def __post_init__(self):
        if self.spatial_mode not in SPATIAL_MODES:
            raise ConfigError(f"spatial_mode {self.spatial_mode!r} not in {SPATIAL_MODES}")
        if self.incremental_mode not in INCREMENTAL_MODES:
            raise ConfigError(
                f"incremental_mode {self.incremental_mode!r} not in {INCREMENTAL_MODES}"
            )
        if self.form not in FORMS:
            raise ConfigError(f"form {self.form!r} not in {FORMS}")

    def validate_for(self, net: Network) -> None:
        self.incremental_weights.validate_for(net)
        self.spatial_weights.validate_for(net)


def init_node_states(
    net: Network,
    n: int,
    eps: float = 1e-3,
    nu0: float | None = None,
    track_cform: bool = False,
) -> dict:
    """Identical regularized priors for every node."""
    states = {}
    for k in net.nodes():
        stats = nig.nig_init(n, eps=eps, nu0=nu0)
        theta = nig.point_estimate_theta(stats)
        sigma2 = nig.estimate_noise_variance(stats)
        cstats = nig.reparameterize(stats) if track_cform else None
        states[k] = NodeState(id=k, stats=stats, theta_hat=theta, sigma2_hat=sigma2, cstats=cstats)
    return states


def _check_coverage(kind: str, node_id: int, got, expected) -> None:
    if set(got) != set(expected):
        missing = sorted(set(expected) - set(got))
        extra = sorted(set(got) - set(expected))
        raise IncompleteNeighbourhoodError(
            f"node {node_id}: {kind} cover {sorted(got)}, expected exactly "
            f"{sorted(expected)} (missing {missing}, extra {extra})"
        )


def _check_row_sum(node_id: int, row: Mapping[int, float]) -> None:
    total = sum(row.values())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidWeightsError(f"node {node_id}: weight row sums to {total!r}, expected 1")


def incremental_update(
    node: NodeState,
    data: Sequence,
    c_row: Mapping[int, float],
    estimate_from: str = "v",
) -> NodeState:
    """Fold the closed neighbourhood's observations into the node's statistics.

    data is a sequence of (source node id, Observation) covering exactly the
    support of c_row; observations are folded in ascending source-id order
    with their row weights, and the degrees of freedom grow by one for the
    completed sweep.
    """
    by_id = dict(data)
    if len(by_id) != len(data):
        raise IncompleteNeighbourhoodError(f"node {node.id}: duplicate source ids in data")
    _check_coverage("data", node.id, by_id, c_row)
    _check_row_sum(node.id, c_row)

    v = node.stats.v
    for l in sorted(by_id):
        z = by_id[l].z
        if z.shape != (node.stats.n + 1,):
            raise IncompleteNeighbourhoodError(
                f"node {node.id}: observation from {l} has regressor dimension "
                f"{z.shape[0] - 1}, expected {node.stats.n}"
            )
        v = v + c_row[l] * np.outer(z, z)
    stats = nig.NigVForm(v=(v + v.T) / 2.0, nu=node.stats.nu + 1.0)

    cstats = node.cstats
    if cstats is not None:
        for l in sorted(by_id):
            cstats = nig.cform_rank_one_update(cstats, by_id[l], c_row[l])
    if estimate_from == "c":
        if cstats is None:
            raise ConfigError(
                f"node {node.id}: estimates from the rank-one form need mirrored "
                "statistics; initialize states with track_cform=True"
            )
        theta = cstats.theta_hat
        sigma2 = cstats.lam / cstats.nu
    else:
        theta = nig.point_estimate_theta(stats)
        sigma2 = nig.estimate_noise_variance(stats)
    return replace(node, stats=stats, cstats=cstats, theta_hat=theta, sigma2_hat=sigma2)


def spatial_update(node: NodeState, estimates: Sequence, a_row: Mapping[int, float]) -> NodeState:
    """Replace the node's estimates by the convex combination of its neighbours'.

    estimates is a sequence of (source node id, theta_hat, sigma2_hat); the
    statistics are left untouched; the combined value is a final product
    for this step, not the next step's prior.
    """
    by_id = {l: (theta, sigma2) for l, theta, sigma2 in estimates}
    if len(by_id) != len(estimates):
        raise IncompleteNeighbourhoodError(f"node {node.id}: duplicate source ids in estimates")
    _check_coverage("estimates", node.id, by_id, a_row)
    _check_row_sum(node.id, a_row)

    theta = np.zeros_like(node.theta_hat)
    sigma2 = 0.0
    for l in sorted(by_id):
        th, s2 = by_id[l]
        theta = theta + a_row[l] * np.asarray(th, dtype=float)
        sigma2 += a_row[l] * s2
    return replace(node, theta_hat=theta, sigma2_hat=sigma2)


def spatial_statistic_average(
    node: NodeState, stats: Sequence, a_row: Mapping[int, float]
) -> NodeState:
    """Convex combination of neighbours' (V, nu) statistics.

    Unlike spatial_update this replaces the node's statistics, so the
    combination becomes the prior for the next step. The point estimates
    are refreshed from the combined statistic. This is the documented
    moment-averaging heuristic, not an exact consensus projection.
    """
    by_id = dict(stats)
    if len(by_id) != len(stats):
        raise IncompleteNeighbourhoodError(f"node {node.id}: duplicate source ids in stats")
    _check_coverage("statistics", node.id, by_id, a_row)
    _check_row_sum(node.id, a_row)

    v = np.zeros_like(node.stats.v)
    nu = 0.0
    for l in sorted(by_id):
        v = v + a_row[l] * by_id[l].v
        nu += a_row[l] * by_id[l].nu
    combined = nig.NigVForm(v=(v + v.T) / 2.0, nu=nu)
    cstats = nig.reparameterize(combined) if node.cstats is not None else None
    theta = nig.point_estimate_theta(combined)
    sigma2 = nig.estimate_noise_variance(combined)
    return replace(node, stats=combined, cstats=cstats, theta_hat=theta, sigma2_hat=sigma2)


def incremental_phase(
    states: Mapping[int, NodeState],
    net: Network,
    cfg: DiffusionConfig,
    step_data: Mapping[int, nig.Observation],
) -> dict:
    """Phase one of a step: every node folds its neighbourhood's observations.

    Reads only this step's observations, never other nodes' states, so the
    outcome is independent of processing order.
    """
    if set(step_data) != set(net.nodes()):
        raise IncompleteNeighbourhoodError(
            f"step data cover nodes {sorted(step_data)}, expected 1..{net.node_count}"
        )
    out = {}
    for k in net.nodes():
        if cfg.incremental_mode == "self-only":
            data = [(k, step_data[k])]
            c_row = {k: 1.0}
        else:
            nk = net.neighbourhood_sorted(k)
            data = [(l, step_data[l]) for l in nk]
            c_row = cfg.incremental_weights.row(k)
        try:
            out[k] = incremental_update(states[k], data, c_row, estimate_from=cfg.form)
        except DiffBayesError as e:
            raise type(e)(f"node {k}, incremental phase: {e}") from e
    return out


def spatial_phase(
    states: Mapping[int, NodeState], net: Network, cfg: DiffusionConfig
) -> dict:
    """Phase two of a step: every node combines its neighbours' phase-one outputs."""
    if cfg.spatial_mode == "off":
        return dict(states)
    result = {}
    for k in net.nodes():
        nk = net.neighbourhood_sorted(k)
        a_row = cfg.spatial_weights.row(k)
        try:
            if cfg.spatial_mode == "estimate-combination":
                ests = [(l, states[l].theta_hat, states[l].sigma2_hat) for l in nk]
                result[k] = spatial_update(states[k], ests, a_row)
            else:
                stats = [(l, states[l].stats) for l in nk]
                result[k] = spatial_statistic_average(states[k], stats, a_row)
        except DiffBayesError as e:
            raise type(e)(f"node {k}, spatial phase: {e}") from e
    return result


def network_step(
    states: Mapping[int, NodeState],
    net: Network,
    cfg: DiffusionConfig,
    step_data: Mapping[int, nig.Observation],
) -> dict:
    """One synchronous two-phase step over the whole network.

    Phase one reads only this step's observations; phase two reads only
    phase-one outputs (barrier in between). Errors from per-node operations
    are re-raised annotated with the node id and phase.
    """
    return spatial_phase(incremental_phase(states, net, cfg, step_data), net, cfg)
