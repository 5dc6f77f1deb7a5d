"""Undirected node networks, closed neighbourhoods, and combination weights.

Nodes are numbered 1..M. A node's closed neighbourhood is itself plus every
node it shares an edge with; it is the only scope over which data or
estimates may be combined. Weight tables are row-stochastic per node and
supported exactly on the closed neighbourhood.
"""

from __future__ import annotations

import functools
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._rng import PURPOSE_TOPOLOGY, substream
from .errors import (
    ConfigError,
    InvalidNodeError,
    InvalidParameterError,
    InvalidWeightsError,
    TopologyError,
)

ROW_SUM_TOL = 1e-12

TOPOLOGY_KINDS = ("edge-list", "ring", "path", "fully-connected", "random-geometric")


@dataclass(frozen=True)
class Network:
    """Undirected graph on nodes 1..node_count, without self-loops.

    Edges are stored as (k, l) pairs with k < l, so symmetry and
    deduplication hold by construction.
    """

    node_count: int
    edges: frozenset

    def __post_init__(self):
        if self.node_count < 1:
            raise ConfigError(f"node_count must be >= 1, got {self.node_count}")
        for edge in self.edges:
            k, l = edge
            if not (1 <= k < l <= self.node_count):
                raise ConfigError(
                    f"edge {edge!r} invalid for {self.node_count} nodes "
                    "(need 1 <= k < l <= node_count, no self-loops)"
                )

    @classmethod
    def from_pairs(cls, node_count: int, pairs: Iterable[tuple[int, int]]) -> "Network":
        """Build from unordered pairs; orientation and duplicates are normalized."""
        edges = set()
        for k, l in pairs:
            if k == l:
                raise ConfigError(f"self-loop {k}-{l} not allowed")
            edges.add((min(k, l), max(k, l)))
        return cls(node_count=node_count, edges=frozenset(edges))

    @functools.cached_property
    def _closed(self) -> dict:
        """node id -> ascending tuple of its closed neighbourhood."""
        nbrs = {k: {k} for k in range(1, self.node_count + 1)}
        for k, l in self.edges:
            nbrs[k].add(l)
            nbrs[l].add(k)
        return {k: tuple(sorted(v)) for k, v in nbrs.items()}

    def _check_node(self, k: int) -> None:
        if not (1 <= k <= self.node_count):
            raise InvalidNodeError(f"node {k} out of range 1..{self.node_count}")

    def closed_neighbourhood(self, k: int) -> frozenset:
        """Node k together with all nodes adjacent to it."""
        self._check_node(k)
        return frozenset(self._closed[k])

    def neighbourhood_sorted(self, k: int) -> tuple:
        """Closed neighbourhood of k as an ascending tuple (includes k)."""
        self._check_node(k)
        return self._closed[k]

    def degree(self, k: int) -> int:
        """Number of nodes adjacent to k (open neighbourhood size)."""
        self._check_node(k)
        return len(self._closed[k]) - 1

    def nodes(self) -> range:
        return range(1, self.node_count + 1)


def is_connected(net: Network) -> bool:
    """True when every node is reachable from node 1."""
    if net.node_count == 1:
        return True
    seen = {1}
    queue = deque([1])
    while queue:
        k = queue.popleft()
        for l in net.neighbourhood_sorted(k):
            if l not in seen:
                seen.add(l)
                queue.append(l)
    return len(seen) == net.node_count


@dataclass(frozen=True)
class NeighbourWeights:
    """Row-stochastic combination weights, one row per node.

    rows maps node k to a mapping {l: weight} whose support is exactly the
    closed neighbourhood of k and whose values sum to 1.
    """

    rows: Mapping[int, Mapping[int, float]]

    def row(self, k: int) -> Mapping[int, float]:
        return self.rows[k]

    def to_matrix(self, node_count: int) -> np.ndarray:
        """Dense (M, M) matrix with entry [k-1, l-1] = weight of l in row k."""
        w = np.zeros((node_count, node_count))
        for k, row in self.rows.items():
            for l, value in row.items():
                w[k - 1, l - 1] = value
        return w

    def validate_for(self, net: Network) -> None:
        """Raise InvalidWeightsError unless rows match net's neighbourhood structure."""
        if set(self.rows) != set(net.nodes()):
            raise InvalidWeightsError("weight rows do not cover all nodes")
        for k in net.nodes():
            row = self.rows[k]
            support = frozenset(row)
            expected = net.closed_neighbourhood(k)
            if support != expected:
                raise InvalidWeightsError(
                    f"row {k} supported on {sorted(support)}, expected {sorted(expected)}"
                )
            total = sum(row.values())
            if abs(total - 1.0) > ROW_SUM_TOL or any(v < 0 for v in row.values()):
                raise InvalidWeightsError(f"row {k} is not a convex combination (sum={total!r})")


def uniform_weights(net: Network) -> NeighbourWeights:
    """Equal weight over each closed neighbourhood."""
    rows = {}
    for k in net.nodes():
        nk = net.neighbourhood_sorted(k)
        w = 1.0 / len(nk)
        rows[k] = {l: w for l in nk}
    return NeighbourWeights(rows)


def metropolis_weights(net: Network) -> NeighbourWeights:
    """Edge weight 1/(1 + max degree of the endpoints); self weight absorbs the rest.

    Degrees count adjacent nodes only. Off-diagonal entries are symmetric
    by construction.
    """
    rows = {}
    for k in net.nodes():
        row = {}
        off_total = 0.0
        for l in net.neighbourhood_sorted(k):
            if l == k:
                continue
            w = 1.0 / (1.0 + max(net.degree(k), net.degree(l)))
            row[l] = w
            off_total += w
        row[k] = 1.0 - off_total
        rows[k] = row
    return NeighbourWeights(rows)


def relative_degree_weights(net: Network) -> NeighbourWeights:
    """Weight of l in row k proportional to the size of l's closed neighbourhood."""
    card = {k: len(net.neighbourhood_sorted(k)) for k in net.nodes()}
    rows = {}
    for k in net.nodes():
        nk = net.neighbourhood_sorted(k)
        total = float(sum(card[l] for l in nk))
        rows[k] = {l: card[l] / total for l in nk}
    return NeighbourWeights(rows)


def relative_degree_variance_weights(
    net: Network, noise_vars: Sequence[float]
) -> NeighbourWeights:
    """Like relative-degree, with each node's weight divided by its noise variance.

    noise_vars[k-1] is node k's observation-noise variance; all must be
    positive. Equal variances reduce this to relative_degree_weights.
    """
    if len(noise_vars) != net.node_count:
        raise InvalidParameterError(
            f"need {net.node_count} noise variances, got {len(noise_vars)}"
        )
    for k, v in enumerate(noise_vars, start=1):
        if not v > 0:
            raise InvalidParameterError(f"noise variance of node {k} must be > 0, got {v}")
    card = {k: len(net.neighbourhood_sorted(k)) for k in net.nodes()}
    rows = {}
    for k in net.nodes():
        nk = net.neighbourhood_sorted(k)
        raw = {l: card[l] / noise_vars[l - 1] for l in nk}
        total = sum(raw.values())
        rows[k] = {l: r / total for l, r in raw.items()}
    return NeighbourWeights(rows)


WEIGHT_STRATEGIES = ("uniform", "metropolis", "relative-degree", "relative-degree-variance")


def weights_by_strategy(
    net: Network, strategy: str, noise_vars: Sequence[float] | None = None
) -> NeighbourWeights:
    """Materialize one of the named weight strategies."""
    if strategy == "uniform":
        return uniform_weights(net)
    if strategy == "metropolis":
        return metropolis_weights(net)
    if strategy == "relative-degree":
        return relative_degree_weights(net)
    if strategy == "relative-degree-variance":
        if noise_vars is None:
            raise InvalidParameterError("relative-degree-variance weights need noise variances")
        return relative_degree_variance_weights(net, noise_vars)
    raise ConfigError(f"unknown weight strategy {strategy!r}; choose from {WEIGHT_STRATEGIES}")


@dataclass(frozen=True)
class TopologySpec:
    """How to materialize a Network.

    kind selects the generator; ring/path/fully-connected need no
    parameters, random-geometric needs a radius, edge-list needs edges.
    """

    kind: str
    radius: float | None = None
    edges: tuple | None = None

    def __post_init__(self):
        if self.kind not in TOPOLOGY_KINDS:
            raise ConfigError(f"unknown topology kind {self.kind!r}; choose from {TOPOLOGY_KINDS}")
        if self.kind == "random-geometric":
            if self.radius is None or not (0 < self.radius):
                raise ConfigError("random-geometric topology needs a radius > 0")
        if self.kind == "edge-list" and self.edges is None:
            raise ConfigError("edge-list topology needs edges")


def parse_edge_list(text: str) -> tuple:
    """Parse the edge-list text format: one `k l` pair per line, 1-based ids.

    Blank lines and lines starting with '#' are ignored.
    """
    pairs = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"edge list line {ln}: expected `k l`, got {line!r}")
        try:
            k, l = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigError(f"edge list line {ln}: non-integer node id in {line!r}") from None
        pairs.append((k, l))
    return tuple(pairs)


def format_edge_list(net: Network) -> str:
    """Inverse of parse_edge_list, edges in ascending order."""
    return "\n".join(f"{k} {l}" for k, l in sorted(net.edges)) + ("\n" if net.edges else "")


def random_geometric(
    node_count: int, radius: float, seed: int, max_retries: int = 100
) -> Network:
    """Connected random-geometric graph on the unit square.

    Nodes are placed uniformly at random; two nodes are joined when their
    distance is at most radius. Redraws positions until the graph is
    connected, up to max_retries attempts.
    """
    for attempt in range(max_retries):
        rng = substream(seed, PURPOSE_TOPOLOGY, attempt)
        pos = rng.random((node_count, 2))
        pairs = []
        for i, j in itertools.combinations(range(node_count), 2):
            if np.hypot(*(pos[i] - pos[j])) <= radius:
                pairs.append((i + 1, j + 1))
        net = Network.from_pairs(node_count, pairs)
        if is_connected(net):
            return net
    raise TopologyError(
        f"no connected random-geometric graph with M={node_count}, radius={radius} "
        f"after {max_retries} draws (seed {seed}); increase the radius"
    )


def build_network(spec: TopologySpec, node_count: int, seed: int = 0) -> Network:
    """Materialize a TopologySpec into a Network."""
    m = node_count
    if spec.kind == "edge-list":
        return Network.from_pairs(m, spec.edges)
    if spec.kind == "path":
        return Network.from_pairs(m, [(k, k + 1) for k in range(1, m)])
    if spec.kind == "ring":
        pairs = [(k, k + 1) for k in range(1, m)]
        if m > 2:
            pairs.append((1, m))
        return Network.from_pairs(m, pairs)
    if spec.kind == "fully-connected":
        return Network.from_pairs(m, itertools.combinations(range(1, m + 1), 2))
    return random_geometric(m, spec.radius, seed)
