import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaynet.metrics import (FlowResult, connectivity_ratio, flow_hop_counts, mean_power_dbm,
                              shortest_path, step_metrics, system_goodput, tx_power_mw)
from relaynet.network import NodeKind, TopologySnapshot, build_graph

from conftest import make_network, random_network

R, T, S = NodeKind.RELAY, NodeKind.TERMINAL, NodeKind.SOURCE


def floyd_warshall(adj):
    n = adj.shape[0]
    d = np.where(adj, 1.0, np.inf)
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


def test_one_hop():
    net = make_network([[0, 0], [2, 0]], [S, T], [3.0, 0.0])
    assert flow_hop_counts(build_graph(net), net) == [FlowResult(0, 1, 1)]


def test_forced_two_hop():
    net = make_network([[0, 0], [2.5, 0], [5, 0]], [S, R, T], [3.0, 3.0, 0.0],
                       terminal_map={0: [2]})
    assert flow_hop_counts(build_graph(net), net)[0].hop_count == 2


def test_unreachable_with_silent_relays():
    net = make_network([[0, 0], [2.5, 0], [5, 0]], [S, R, T], [3.0, 0.0, 0.0],
                       terminal_map={0: [2]})
    assert flow_hop_counts(build_graph(net), net)[0].hop_count is None


def test_shortest_path_route():
    net = make_network([[0, 0], [2.5, 0], [5, 0]], [S, R, T], [3.0, 3.0, 0.0],
                       terminal_map={0: [2]})
    assert shortest_path(build_graph(net), 0, 2) == [0, 1, 2]


def test_hop_counts_match_floyd_warshall(rng):
    for _ in range(60):
        n = int(rng.integers(5, 51))
        net = random_network(rng, n, size=float(rng.uniform(4, 12)))
        topo = build_graph(net)
        d = floyd_warshall(topo.adjacency)
        for f in flow_hop_counts(topo, net):
            ref = d[f.source_id, f.terminal_id]
            assert (f.hop_count is None) == math.isinf(ref)
            if f.hop_count is not None:
                assert f.hop_count == ref


@pytest.mark.parametrize("hops, expected", [
    ([2, None], 455.0),
    ([1, 1], 1820.0),
    ([None, None], 0.0),
])
def test_goodput(hops, expected):
    flows = [FlowResult(0, 10 + k, h) for k, h in enumerate(hops)]
    assert system_goodput(flows, 910.0) == expected


@pytest.mark.parametrize("hops, expected", [([3, None], 0.5), ([1, 4], 1.0), ([None, None], 0.0)])
def test_connectivity(hops, expected):
    assert connectivity_ratio([FlowResult(0, 1, h) for h in hops]) == expected


@settings(max_examples=100, deadline=None)
@given(hops=st.lists(st.one_of(st.none(), st.integers(1, 30)), min_size=1, max_size=6),
       k=st.integers(0, 5))
def test_goodput_antimonotone_in_hops(hops, k):
    k %= len(hops)
    base = system_goodput([FlowResult(0, 1, h) for h in hops])
    if hops[k] is not None and hops[k] > 1:
        shorter = list(hops)
        shorter[k] -= 1
        assert system_goodput([FlowResult(0, 1, h) for h in shorter]) >= base


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_adding_edge_never_reduces_connectivity(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, 20, size=8.0)
    topo = build_graph(net)
    before = connectivity_ratio(flow_hop_counts(topo, net))
    adj = topo.adjacency.copy()
    i, j = rng.integers(0, net.n_nodes, size=2)
    if i != j:
        adj[i, j] = True
    after = connectivity_ratio(flow_hop_counts(TopologySnapshot(adj), net))
    assert after >= before


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_phi_in_unit_interval(seed):
    net = random_network(np.random.default_rng(seed), 25, size=6.0)
    m = step_metrics(build_graph(net), net)
    assert 0.0 <= m.phi <= 1.0
    assert m.phi <= m.connectivity_ratio


def test_phi_equals_connectivity_for_one_hop_flows():
    net = make_network([[0, 0], [1, 0], [0, 9], [1, 9]], [S, S, T, T], [2.0, 2.0, 0, 0],
                       terminal_map={0: [2], 1: [3]})
    net.positions[3] = [1, 1]
    m = step_metrics(build_graph(net), net)
    assert m.connectivity_ratio == 0.5 and m.phi == 0.5


@pytest.mark.parametrize("radius, mw", [(3.0, 9.0), (0.0, 0.0), (1.0, 1.0)])
def test_tx_power(radius, mw):
    assert tx_power_mw(radius) == mw


def test_tx_power_increasing_convex():
    r = np.linspace(0, 3, 301)
    p = tx_power_mw(r)
    assert np.all(np.diff(p) > 0)
    assert np.all(np.diff(p, 2) > 0)


def test_mean_power_dbm():
    assert mean_power_dbm([3.0] * 4) == pytest.approx(10 * math.log10(9), abs=1e-12)
    assert round(mean_power_dbm([3.0] * 4), 2) == 9.54
    assert round(mean_power_dbm([3.0, 0.0, 3.0, 0.0]), 2) == 6.53
    assert mean_power_dbm([0.0, 0.0]) == -math.inf
