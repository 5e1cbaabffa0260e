import numpy as np

from syncflow import (
    build_incidence,
    extended_graph,
    max_flow_feasible,
    partition_check,
)

from conftest import make_net, random_network


def test_two_node_feasible_certificate():
    net = make_net([0], [1], [1.0], [0.5, -0.5])
    cert = max_flow_feasible(net)
    assert cert.feasible
    assert cert.max_flow_value >= cert.source_power - 1e-9
    assert np.max(np.abs(build_incidence(net) @ cert.flows
                         - net.injections)) < 1e-9
    assert np.all(np.abs(cert.flows) <= net.couplings + 1e-9)


def test_two_node_infeasible_certificate():
    net = make_net([0], [1], [1.0], [1.5, -1.5])
    cert = max_flow_feasible(net)
    assert not cert.feasible
    assert cert.cut_nodes is not None
    assert cert.cut_power > cert.cut_capacity


def test_zero_injection_short_circuit():
    net = make_net([0, 1], [1, 2], [1.0, 1.0], [0.0, 0.0, 0.0])
    cert = max_flow_feasible(net)
    assert cert.feasible
    assert cert.source_power == 0.0


def test_extended_graph_structure():
    net = make_net([0], [1], [2.0], [1.0, -1.0])
    g = extended_graph(net)
    assert "s" in g and "t" in g
    assert g["s"][0]["capacity"] > 1.0  # source arc strictly above p_hat
    assert g[0][1]["capacity"] == 2.0
    assert g[1][0]["capacity"] == 2.0


def test_parallel_edges_aggregate_and_split():
    net = make_net([0, 0], [1, 1], [1.0, 3.0], [2.0, -2.0])
    cert = max_flow_feasible(net)
    assert cert.feasible
    # feasible flow splits proportionally to coupling
    assert cert.flows[0] == 0.25 * cert.flows[1] or np.isclose(
        cert.flows[0] / 1.0, cert.flows[1] / 3.0)


def test_agrees_with_exhaustive_partition_check():
    rng = np.random.default_rng(60)
    feasible_seen = infeasible_seen = 0
    for _ in range(100):
        scale = float(rng.uniform(0.2, 4.0))
        net = random_network(rng, int(rng.integers(3, 9)), extra_edges=2)
        net = make_net(net.tails, net.heads, net.couplings,
                       net.injections * scale)
        cert = max_flow_feasible(net)
        ok, _, margin = partition_check(net)
        assert cert.feasible == ok, "max-flow and partitions disagree"
        if cert.feasible:
            feasible_seen += 1
            assert margin >= -1e-9
        else:
            infeasible_seen += 1
            assert cert.cut_power > cert.cut_capacity
    assert feasible_seen > 10 and infeasible_seen > 10


def test_feasible_flows_always_valid():
    rng = np.random.default_rng(61)
    for _ in range(50):
        net = random_network(rng, int(rng.integers(3, 12)), extra_edges=3,
                             target_loading=float(rng.uniform(0.3, 1.5)))
        cert = max_flow_feasible(net)
        if not cert.feasible:
            continue
        assert np.max(np.abs(build_incidence(net) @ cert.flows
                             - net.injections)) < 1e-8
        assert np.all(np.abs(cert.flows) <= net.couplings + 1e-8)
