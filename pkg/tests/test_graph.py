import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffbayes.errors import (
    ConfigError,
    InvalidNodeError,
    InvalidParameterError,
    InvalidWeightsError,
    TopologyError,
)
from diffbayes.graph import (
    Network,
    TopologySpec,
    build_network,
    format_edge_list,
    is_connected,
    metropolis_weights,
    parse_edge_list,
    random_geometric,
    relative_degree_variance_weights,
    relative_degree_weights,
    uniform_weights,
    weights_by_strategy,
)

from conftest import random_connected_net

ALL_STRATEGIES = (
    uniform_weights,
    metropolis_weights,
    relative_degree_weights,
    lambda net: relative_degree_variance_weights(net, [1.0] * net.node_count),
)


def edge_sets(max_nodes=12):
    """Hypothesis strategy: (node_count, valid edge pairs)."""
    return st.integers(2, max_nodes).flatmap(
        lambda m: st.tuples(
            st.just(m),
            st.sets(
                st.tuples(st.integers(1, m), st.integers(1, m)).filter(lambda p: p[0] < p[1]),
                max_size=2 * m,
            ),
        )
    )


class TestClosedNeighbourhood:
    def test_example_network(self):
        # node 1 adjacent to 2, 3 and 5 only
        net = Network.from_pairs(6, [(1, 2), (1, 3), (1, 5), (2, 3), (3, 4), (4, 6)])
        assert net.closed_neighbourhood(1) == {1, 2, 3, 5}

    def test_isolated_node(self):
        net = Network.from_pairs(3, [])
        assert net.closed_neighbourhood(2) == {2}

    def test_path_interior(self):
        net = Network.from_pairs(3, [(1, 2), (2, 3)])
        assert net.closed_neighbourhood(2) == {1, 2, 3}

    def test_out_of_range(self):
        net = Network.from_pairs(3, [(1, 2)])
        with pytest.raises(InvalidNodeError):
            net.closed_neighbourhood(4)
        with pytest.raises(InvalidNodeError):
            net.closed_neighbourhood(0)

    @given(edge_sets())
    @settings(max_examples=60, deadline=None)
    def test_membership_symmetry(self, me):
        m, pairs = me
        net = Network.from_pairs(m, pairs)
        for k in net.nodes():
            for l in net.closed_neighbourhood(k):
                assert k in net.closed_neighbourhood(l)

    def test_always_contains_self(self):
        net = Network.from_pairs(4, [(1, 2)])
        for k in net.nodes():
            nk = net.closed_neighbourhood(k)
            assert k in nk and len(nk) >= 1


class TestNetworkConstruction:
    def test_self_loop_rejected(self):
        with pytest.raises(ConfigError):
            Network.from_pairs(3, [(2, 2)])

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(ConfigError):
            Network.from_pairs(3, [(1, 4)])

    def test_duplicates_and_orientation_normalized(self):
        net = Network.from_pairs(3, [(2, 1), (1, 2), (1, 2)])
        assert net.edges == frozenset({(1, 2)})


class TestUniformWeights:
    def test_path_interior(self):
        net = Network.from_pairs(3, [(1, 2), (2, 3)])
        row = uniform_weights(net).row(2)
        assert row == {1: pytest.approx(1 / 3), 2: pytest.approx(1 / 3), 3: pytest.approx(1 / 3)}

    def test_isolated(self):
        net = Network.from_pairs(2, [])
        assert uniform_weights(net).row(1) == {1: 1.0}

    def test_fully_connected(self):
        net = build_network(TopologySpec(kind="fully-connected"), 4)
        for k in net.nodes():
            assert all(w == pytest.approx(0.25) for w in uniform_weights(net).row(k).values())


class TestMetropolisWeights:
    def test_path_hand_applied(self):
        # degrees 1, 2, 1: w(2<-1) = 1/(1+max(1,2)) = 1/3, self weight 2/3
        net = Network.from_pairs(3, [(1, 2), (2, 3)])
        w = metropolis_weights(net)
        assert w.row(1)[2] == pytest.approx(1 / 3)
        assert w.row(1)[1] == pytest.approx(2 / 3)

    def test_isolated(self):
        net = Network.from_pairs(1, [])
        assert metropolis_weights(net).row(1) == {1: 1.0}

    def test_fully_connected_three(self):
        net = build_network(TopologySpec(kind="fully-connected"), 3)
        w = metropolis_weights(net)
        for k in net.nodes():
            for l, value in w.row(k).items():
                assert value == pytest.approx(1 / 3)

    def test_off_diagonal_symmetry_exact(self, rng):
        for _ in range(20):
            net = random_connected_net(rng, int(rng.integers(2, 15)))
            w = metropolis_weights(net)
            for k, l in net.edges:
                assert w.row(k)[l] == w.row(l)[k]


class TestRelativeDegreeWeights:
    def test_two_connected_nodes(self):
        net = Network.from_pairs(2, [(1, 2)])
        assert relative_degree_weights(net).row(1) == {1: pytest.approx(0.5), 2: pytest.approx(0.5)}

    def test_hand_applied_cardinalities(self):
        # N_1 = {1, 2} with card 2; N_2 = {1, 2, 3} with card 3
        net = Network.from_pairs(3, [(1, 2), (2, 3)])
        row = relative_degree_weights(net).row(1)
        assert row[1] == pytest.approx(2 / 5)
        assert row[2] == pytest.approx(3 / 5)

    def test_isolated(self):
        net = Network.from_pairs(2, [])
        assert relative_degree_weights(net).row(2) == {2: 1.0}


class TestRelativeDegreeVarianceWeights:
    def test_equal_variances_reduce_to_relative_degree(self, rng):
        net = random_connected_net(rng, 8)
        plain = relative_degree_weights(net)
        scaled = relative_degree_variance_weights(net, [2.5] * 8)
        for k in net.nodes():
            for l, w in plain.row(k).items():
                assert scaled.row(k)[l] == pytest.approx(w, rel=1e-14)

    def test_hand_applied(self):
        # equal cardinalities, variances 1 and 0.25 -> weights 1/5 and 4/5
        net = Network.from_pairs(2, [(1, 2)])
        row = relative_degree_variance_weights(net, [1.0, 0.25]).row(1)
        assert row[1] == pytest.approx(1 / 5)
        assert row[2] == pytest.approx(4 / 5)

    def test_isolated(self):
        net = Network.from_pairs(2, [])
        assert relative_degree_variance_weights(net, [1.0, 9.0]).row(1) == {1: 1.0}

    def test_nonpositive_variance_rejected(self):
        net = Network.from_pairs(2, [(1, 2)])
        with pytest.raises(InvalidParameterError):
            relative_degree_variance_weights(net, [1.0, 0.0])
        with pytest.raises(InvalidParameterError):
            relative_degree_variance_weights(net, [1.0, -2.0])


class TestWeightInvariants:
    def test_rows_stochastic_and_supported(self, rng):
        for _ in range(25):
            net = random_connected_net(rng, int(rng.integers(1, 20)))
            for strategy in ALL_STRATEGIES:
                w = strategy(net)
                w.validate_for(net)  # support + row sums within 1e-12
                for k in net.nodes():
                    assert abs(sum(w.row(k).values()) - 1.0) <= 1e-12

    def test_validate_rejects_bad_support(self):
        net = Network.from_pairs(2, [(1, 2)])
        from diffbayes.graph import NeighbourWeights

        bad = NeighbourWeights({1: {1: 1.0}, 2: {1: 0.5, 2: 0.5}})
        with pytest.raises(InvalidWeightsError):
            bad.validate_for(net)

    def test_validate_rejects_bad_sum(self):
        net = Network.from_pairs(2, [(1, 2)])
        from diffbayes.graph import NeighbourWeights

        bad = NeighbourWeights({1: {1: 0.6, 2: 0.6}, 2: {1: 0.5, 2: 0.5}})
        with pytest.raises(InvalidWeightsError):
            bad.validate_for(net)

    def test_to_matrix_matches_rows(self, rng):
        net = random_connected_net(rng, 6)
        w = metropolis_weights(net)
        mat = w.to_matrix(6)
        for k in net.nodes():
            assert mat[k - 1].sum() == pytest.approx(1.0, abs=1e-12)
            for l in net.nodes():
                expected = w.row(k).get(l, 0.0)
                assert mat[k - 1, l - 1] == expected

    def test_dispatch(self, rng):
        net = random_connected_net(rng, 5)
        w = weights_by_strategy(net, "metropolis")
        assert w.rows == metropolis_weights(net).rows
        with pytest.raises(ConfigError):
            weights_by_strategy(net, "banana")
        with pytest.raises(InvalidParameterError):
            weights_by_strategy(net, "relative-degree-variance")


class TestTopologies:
    def test_path(self):
        net = build_network(TopologySpec(kind="path"), 4)
        assert net.edges == frozenset({(1, 2), (2, 3), (3, 4)})

    def test_ring(self):
        net = build_network(TopologySpec(kind="ring"), 4)
        assert net.edges == frozenset({(1, 2), (2, 3), (3, 4), (1, 4)})

    def test_ring_of_two_has_single_edge(self):
        net = build_network(TopologySpec(kind="ring"), 2)
        assert net.edges == frozenset({(1, 2)})

    def test_fully_connected(self):
        net = build_network(TopologySpec(kind="fully-connected"), 4)
        assert len(net.edges) == 6

    def test_edge_list_round_trip(self):
        text = "1 2\n2 3\n\n# comment\n3 4\n"
        pairs = parse_edge_list(text)
        net = build_network(TopologySpec(kind="edge-list", edges=pairs), 4)
        assert parse_edge_list(format_edge_list(net)) == ((1, 2), (2, 3), (3, 4))

    def test_edge_list_bad_line(self):
        with pytest.raises(ConfigError):
            parse_edge_list("1 2 3\n")
        with pytest.raises(ConfigError):
            parse_edge_list("a b\n")

    def test_random_geometric_connected_and_deterministic(self):
        net1 = random_geometric(15, 0.4, seed=11)
        net2 = random_geometric(15, 0.4, seed=11)
        assert is_connected(net1)
        assert net1 == net2

    def test_random_geometric_gives_up(self):
        with pytest.raises(TopologyError):
            random_geometric(12, 1e-6, seed=1, max_retries=5)

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            TopologySpec(kind="torus")
        with pytest.raises(ConfigError):
            TopologySpec(kind="random-geometric")
        with pytest.raises(ConfigError):
            TopologySpec(kind="edge-list")

    def test_is_connected(self):
        assert is_connected(Network.from_pairs(1, []))
        assert not is_connected(Network.from_pairs(3, [(1, 2)]))
        assert is_connected(Network.from_pairs(3, [(1, 2), (1, 3)]))
