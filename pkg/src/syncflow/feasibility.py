"""Existence tests for balanced flows under line limits.

A solution of the nodal balance equations with |f_e| <= K_e exists iff the
maximum s-t flow of an extended graph (super-source feeding all injections,
super-sink draining all withdrawals) carries the full injected power.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import networkx as nx
import numpy as np

from .network import Network

FLOW_TOL = 1e-9


@dataclass(frozen=True)
class FeasibilityCertificate:
    feasible: bool
    max_flow_value: float
    source_power: float
    flows: np.ndarray | None  # feasible per-edge flows when feasible
    cut_nodes: tuple[int, ...] | None  # violating partition side otherwise
    cut_power: float | None  # |sum of injections| inside the cut side
    cut_capacity: float | None  # total coupling crossing the cut


def extended_graph(net: Network) -> nx.DiGraph:
    """Directed capacity graph with super-source 's' and super-sink 't'.

    Every line is modeled by two antiparallel arcs of capacity K_e (the
    line limit is symmetric); parallel lines aggregate their capacity.
    Source/sink arcs get capacity source_power + 1, effectively infinite.
    """
    g = nx.DiGraph()
    g.add_nodes_from(range(net.node_count))
    for u, v, k in net.edges():
        for a, b in ((u, v), (v, u)):
            if g.has_edge(a, b):
                g[a][b]["capacity"] += k
            else:
                g.add_edge(a, b, capacity=k)
    p_hat = float(net.injections[net.injections > 0].sum())
    big = p_hat + 1.0
    for n, p in enumerate(net.injections):
        if p > 0:
            g.add_edge("s", n, capacity=big)
        elif p < 0:
            g.add_edge(n, "t", capacity=big)
    g.graph["source_power"] = p_hat
    return g


def max_flow_feasible(net: Network) -> FeasibilityCertificate:
    """Exact max-flow feasibility certificate for the line-limited balance."""
    g = extended_graph(net)
    p_hat = g.graph["source_power"]
    if p_hat == 0.0:
        return FeasibilityCertificate(
            feasible=True, max_flow_value=0.0, source_power=0.0,
            flows=np.zeros(net.edge_count), cut_nodes=None,
            cut_power=None, cut_capacity=None)
    # cap source arcs at the actual injections so the attained flow
    # satisfies the nodal balance exactly when feasible
    for n, p in enumerate(net.injections):
        if p > 0:
            g["s"][n]["capacity"] = float(p)
        elif p < 0:
            g[n]["t"]["capacity"] = float(-p)
    value, flow_dict = nx.maximum_flow(
        g, "s", "t", flow_func=nx.algorithms.flow.preflow_push)
    if value >= p_hat - FLOW_TOL:
        flows = _edge_flows(net, flow_dict)
        return FeasibilityCertificate(
            feasible=True, max_flow_value=float(value), source_power=p_hat,
            flows=flows, cut_nodes=None, cut_power=None, cut_capacity=None)
    # infeasible: expose the violating partition from the min cut.  With
    # the source/sink arcs capped at the true injections, a cut value
    # below the total generation forces the source-side node set V1 to
    # satisfy p_bar_1 > K_bar_12.
    _, (side_s, _) = nx.minimum_cut(
        g, "s", "t", flow_func=nx.algorithms.flow.preflow_push)
    part = tuple(sorted(n for n in side_s if n != "s"))
    cut_power = abs(float(net.injections[list(part)].sum()))
    inside = np.zeros(net.node_count, dtype=bool)
    inside[list(part)] = True
    crossing = inside[net.tails] != inside[net.heads]
    cut_capacity = float(net.couplings[crossing].sum())
    return FeasibilityCertificate(
        feasible=False, max_flow_value=float(value), source_power=p_hat,
        flows=None, cut_nodes=part, cut_power=cut_power,
        cut_capacity=cut_capacity)


def _edge_flows(net: Network, flow_dict) -> np.ndarray:
    """Net per-edge flows from an arc flow dict, split over parallel lines
    proportionally to their coupling."""
    flows = np.zeros(net.edge_count)
    pair_total: dict[tuple[int, int], float] = {}
    for e, (u, v) in enumerate(zip(net.tails.tolist(), net.heads.tolist())):
        key = (min(u, v), max(u, v))
        pair_total[key] = pair_total.get(key, 0.0) + float(net.couplings[e])
    for e, (u, v) in enumerate(zip(net.tails.tolist(), net.heads.tolist())):
        fwd = flow_dict.get(u, {}).get(v, 0.0)
        bwd = flow_dict.get(v, {}).get(u, 0.0)
        key = (min(u, v), max(u, v))
        share = float(net.couplings[e]) / pair_total[key]
        flows[e] = (fwd - bwd) * share
    return flows


def partition_check(net: Network, exhaustive_limit: int = 20):
    """Exhaustive bipartition test |p_bar| <= K_bar (sufficient condition).

    Returns (ok, worst partition as a node tuple, minimum margin).
    """
    n = net.node_count
    if n > exhaustive_limit:
        raise ValueError(
            f"N = {n} exceeds the exhaustive limit {exhaustive_limit}; "
            "use max_flow_feasible instead")
    best_margin = np.inf
    worst: tuple[int, ...] = ()
    others = list(range(1, n))
    for size in range(0, n - 1):
        for rest in combinations(others, size):
            part = (0,) + rest
            inside = np.zeros(n, dtype=bool)
            inside[list(part)] = True
            p_bar = abs(float(net.injections[list(part)].sum()))
            crossing = inside[net.tails] != inside[net.heads]
            k_bar = float(net.couplings[crossing].sum())
            margin = k_bar - p_bar
            if margin < best_margin:
                best_margin = margin
                worst = part
    return best_margin >= -FLOW_TOL, worst, float(best_margin)
