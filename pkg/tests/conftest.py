"""Shared test helpers: random connected networks, random weights, oracles."""

from __future__ import annotations

import numpy as np
import pytest

from diffbayes.graph import NeighbourWeights, Network


def random_connected_net(rng: np.random.Generator, m: int) -> Network:
    """Random spanning tree plus a few extra edges; connected by construction."""
    pairs = set()
    order = rng.permutation(np.arange(1, m + 1))
    for i in range(1, m):
        j = int(rng.integers(0, i))
        a, b = int(order[i]), int(order[j])
        pairs.add((min(a, b), max(a, b)))
    extra = int(rng.integers(0, m))
    for _ in range(extra):
        a, b = rng.integers(1, m + 1, size=2)
        if a != b:
            pairs.add((min(int(a), int(b)), max(int(a), int(b))))
    return Network.from_pairs(m, pairs)


def random_row_weights(rng: np.random.Generator, net: Network) -> NeighbourWeights:
    """Random strictly positive row-stochastic weights on each closed neighbourhood."""
    rows = {}
    for k in net.nodes():
        nk = net.neighbourhood_sorted(k)
        raw = rng.random(len(nk)) + 0.05
        raw /= raw.sum()
        rows[k] = {l: float(w) for l, w in zip(nk, raw)}
    return NeighbourWeights(rows)


def random_spd(rng: np.random.Generator, n: int, ridge: float = 0.5) -> np.ndarray:
    a = rng.normal(size=(n, n))
    m = a @ a.T + ridge * np.eye(n)
    return (m + m.T) / 2.0


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250808)
