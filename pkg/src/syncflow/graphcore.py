"""Incidence/Laplacian machinery, cycle bases, projectors and flow geometry."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .network import Network, adjacency_lists

BALANCE_TOL = 1e-9


def build_incidence(net: Network) -> np.ndarray:
    """Signed node-edge incidence matrix: +1 at the tail, -1 at the head."""
    inc = np.zeros((net.node_count, net.edge_count))
    cols = np.arange(net.edge_count)
    inc[net.tails, cols] = 1.0
    inc[net.heads, cols] = -1.0
    return inc


def build_laplacian(net: Network) -> np.ndarray:
    inc = build_incidence(net)
    return inc @ (net.couplings[:, None] * inc.T)


@dataclass(frozen=True)
class GroundedFactor:
    """Cholesky factor of the Laplacian with the slack row/column removed."""

    cho: tuple
    slack: int
    n: int

    def apply_pinv(self, v: np.ndarray) -> np.ndarray:
        """Zero-mean solution x of L x = v - mean(v)."""
        v = np.asarray(v, dtype=np.float64)
        v = v - v.mean()
        rhs = np.delete(v, self.slack)
        x_red = scipy.linalg.cho_solve(self.cho, rhs)
        x = np.insert(x_red, self.slack, 0.0)
        return x - x.mean()


def grounded_factor(net: Network, slack: int = 0) -> GroundedFactor:
    lap = build_laplacian(net)
    reduced = np.delete(np.delete(lap, slack, axis=0), slack, axis=1)
    cho = scipy.linalg.cho_factor(reduced)
    return GroundedFactor(cho=cho, slack=slack, n=net.node_count)


def laplacian_pinv_apply(net: Network, v: np.ndarray) -> np.ndarray:
    """Action of the Moore-Penrose pseudoinverse of the Laplacian on v.

    The mean of v is deflated, never rejected; the result has zero mean.
    """
    return grounded_factor(net).apply_pinv(v)


@dataclass(frozen=True)
class CycleBasis:
    """M-N+1 independent cycles encoded as signed edge sequences.

    ``matrix`` is the M x (M-N+1) cycle-edge incidence matrix with integer
    entries in {-1, 0, +1} and satisfies E @ matrix == 0 exactly.
    """

    cycles: tuple[tuple[tuple[int, int], ...], ...]  # ((edge, sign), ...)
    matrix: np.ndarray

    @property
    def count(self) -> int:
        return self.matrix.shape[1]

    @property
    def lengths(self) -> np.ndarray:
        return np.count_nonzero(self.matrix, axis=0)


def _bfs_tree(net: Network, root: int = 0):
    """Returns (parent edge index per node, parent sign, tree edge set, order)."""
    adj = adjacency_lists(net)
    parent_edge = np.full(net.node_count, -1, dtype=np.int64)
    parent_sign = np.zeros(net.node_count, dtype=np.int64)
    parent_node = np.full(net.node_count, -1, dtype=np.int64)
    order = [root]
    seen = np.zeros(net.node_count, dtype=bool)
    seen[root] = True
    tree_edges: set[int] = set()
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v, e, sign in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent_edge[v] = e
                parent_sign[v] = sign  # +1: edge oriented u -> v
                parent_node[v] = u
                tree_edges.add(e)
                order.append(v)
                queue.append(v)
    return parent_edge, parent_sign, parent_node, tree_edges, order


def _tree_path_column(n_edges, parent_edge, parent_sign, parent_node, u, v):
    """Signed edge column of the tree path from u to v."""
    col = np.zeros(n_edges, dtype=np.int64)
    # walk both nodes up to the root, recording depth-first; cancel overlap
    path_u = []
    x = u
    while parent_node[x] != -1:
        path_u.append(x)
        x = parent_node[x]
    path_v = []
    x = v
    while parent_node[x] != -1:
        path_v.append(x)
        x = parent_node[x]
    set_u = {n for n in path_u}
    set_v = {n for n in path_v}
    # from u up to the meeting point: traversal against the parent direction
    for x in path_u:
        if x in set_v:
            break
        col[parent_edge[x]] -= parent_sign[x]
    for x in path_v:
        if x in set_u:
            break
        col[parent_edge[x]] += parent_sign[x]
    return col


def _fundamental_bfs(net: Network) -> CycleBasis:
    parent_edge, parent_sign, parent_node, tree_edges, _ = _bfs_tree(net)
    chords = [e for e in range(net.edge_count) if e not in tree_edges]
    cols = []
    cycles = []
    for e in chords:
        u, v = int(net.tails[e]), int(net.heads[e])
        col = _tree_path_column(net.edge_count, parent_edge, parent_sign,
                                parent_node, v, u)
        col[e] += 1  # oriented along the chord
        cols.append(col)
        cycles.append(tuple((int(i), int(col[i]))
                            for i in np.flatnonzero(col)))
    if cols:
        matrix = np.stack(cols, axis=1)
    else:
        matrix = np.zeros((net.edge_count, 0), dtype=np.int64)
    return CycleBasis(cycles=tuple(cycles), matrix=matrix)


def _orient_edge_set(net: Network, edge_set: list[int]) -> np.ndarray:
    """Signed column tracing the simple cycle formed by ``edge_set``."""
    col = np.zeros(net.edge_count, dtype=np.int64)
    incident: dict[int, list[int]] = {}
    for e in edge_set:
        incident.setdefault(int(net.tails[e]), []).append(e)
        incident.setdefault(int(net.heads[e]), []).append(e)
    start = int(net.tails[edge_set[0]])
    node = start
    used: set[int] = set()
    while True:
        nxt = None
        for e in incident[node]:
            if e not in used:
                nxt = e
                break
        if nxt is None:
            break
        used.add(nxt)
        if int(net.tails[nxt]) == node:
            col[nxt] = 1
            node = int(net.heads[nxt])
        else:
            col[nxt] = -1
            node = int(net.tails[nxt])
        if node == start:
            break
    if len(used) != len(edge_set):
        raise ValueError("edge set does not trace a single simple cycle")
    return col


def _is_simple_cycle(net: Network, edge_set) -> bool:
    deg: dict[int, int] = {}
    for e in edge_set:
        deg[int(net.tails[e])] = deg.get(int(net.tails[e]), 0) + 1
        deg[int(net.heads[e])] = deg.get(int(net.heads[e]), 0) + 1
    return all(d == 2 for d in deg.values())


def _minimal_basis(net: Network) -> CycleBasis:
    """Minimum-weight cycle basis (edge count as weight), Horton style."""
    n_cyc = net.cycle_count
    if n_cyc == 0:
        return CycleBasis(cycles=(), matrix=np.zeros((net.edge_count, 0),
                                                     dtype=np.int64))
    adj = adjacency_lists(net)
    n, m = net.node_count, net.edge_count

    # BFS shortest paths (edge count) from every node, tracking one parent edge
    candidates: list[tuple[int, frozenset]] = []
    seen_sets: set[frozenset] = set()
    for root in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        par_edge = np.full(n, -1, dtype=np.int64)
        par_node = np.full(n, -1, dtype=np.int64)
        dist[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, e, _ in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    par_edge[v] = e
                    par_node[v] = u
                    queue.append(v)

        def path_edges(x):
            out = []
            while par_node[x] != -1:
                out.append(int(par_edge[x]))
                x = par_node[x]
            return out

        for e in range(m):
            u, v = int(net.tails[e]), int(net.heads[e])
            pu, pv = path_edges(u), path_edges(v)
            edges = set(pu) ^ set(pv)
            if e in edges:
                continue
            edges.add(e)
            key = frozenset(edges)
            if (len(edges) == len(pu) + len(pv) + 1
                    and key not in seen_sets and _is_simple_cycle(net, key)):
                seen_sets.add(key)
                candidates.append((len(edges), key))
    # parallel-edge 2-cycles
    pair_seen: dict[tuple[int, int], int] = {}
    for e in range(m):
        u, v = sorted((int(net.tails[e]), int(net.heads[e])))
        if (u, v) in pair_seen:
            key = frozenset((pair_seen[(u, v)], e))
            if key not in seen_sets:
                seen_sets.add(key)
                candidates.append((2, key))
        else:
            pair_seen[(u, v)] = e
    candidates.sort(key=lambda t: t[0])

    # greedy GF(2) independence via bitmask elimination
    chosen: list[frozenset] = []
    pivots: list[int] = []
    rows: list[int] = []
    for _, key in candidates:
        vec = 0
        for e in key:
            vec |= 1 << e
        cur = vec
        for piv, row in zip(pivots, rows):
            if cur >> piv & 1:
                cur ^= row
        if cur:
            piv = cur.bit_length() - 1
            pivots.append(piv)
            rows.append(cur)
            chosen.append(key)
            if len(chosen) == n_cyc:
                break
    if len(chosen) != n_cyc:
        raise RuntimeError("minimal cycle basis construction failed")

    cols = []
    cycles = []
    for key in chosen:
        col = _orient_edge_set(net, sorted(key))
        cols.append(col)
        cycles.append(tuple((int(i), int(col[i])) for i in np.flatnonzero(col)))
    return CycleBasis(cycles=tuple(cycles), matrix=np.stack(cols, axis=1))


def cycle_basis(net: Network, kind: str = "fundamental-bfs") -> CycleBasis:
    """Cycle basis of the graph; ``kind`` is 'fundamental-bfs' or 'minimal'."""
    if kind == "fundamental-bfs":
        return _fundamental_bfs(net)
    if kind == "minimal":
        return _minimal_basis(net)
    raise ValueError(f"unknown cycle basis kind: {kind!r}")


def projectors(net: Network) -> tuple[np.ndarray, np.ndarray]:
    """(Pi_dir, Pi_cycle): K-orthogonal projectors onto potential flows
    and cycle flows."""
    inc = build_incidence(net)
    gf = grounded_factor(net)
    # L^+ E computed column-wise through the grounded factorization
    lp_e = np.column_stack([gf.apply_pinv(inc[:, j])
                            for j in range(net.edge_count)])
    pi_dir = net.couplings[:, None] * (inc.T @ lp_e)
    pi_cycle = np.eye(net.edge_count) - pi_dir
    return pi_dir, pi_cycle


def k_inner(net: Network, xi: np.ndarray, zeta: np.ndarray) -> float:
    """Inner product sum_e xi_e zeta_e / K_e."""
    xi = np.asarray(xi, dtype=np.float64)
    zeta = np.asarray(zeta, dtype=np.float64)
    if xi.shape != (net.edge_count,) or zeta.shape != (net.edge_count,):
        raise ValueError("flow vector dimension mismatch")
    return float(np.sum(xi * zeta / net.couplings))


def k_norm(net: Network, xi: np.ndarray) -> float:
    return float(np.sqrt(max(k_inner(net, xi, xi), 0.0)))


def resistance_distance(net: Network, edge: int) -> float:
    """Effective resistance across a single edge with conductances K_e."""
    if not 0 <= edge < net.edge_count:
        raise ValueError(f"edge index {edge} out of range")
    inc = build_incidence(net)
    iota = inc[:, edge]
    u = laplacian_pinv_apply(net, iota)
    return float(iota @ u)


def helmholtz_decompose(net: Network, f: np.ndarray):
    """Split a balanced flow into (potential part, cycle part)."""
    f = np.asarray(f, dtype=np.float64)
    inc = build_incidence(net)
    div = inc @ f
    if abs(div.sum()) > BALANCE_TOL:
        raise ValueError("flow is not energy conserving")
    theta = laplacian_pinv_apply(net, div)
    f_dir = net.couplings * (inc.T @ theta)
    return f_dir, f - f_dir


def cycle_norm_bound_check(net: Network, f_c: np.ndarray, edge: int):
    """Check ||f_c||_K^2 >= f_c[a]^2 / (K_a (1 - K_a Omega_a)).

    Returns (lhs, rhs, holds).  On a bridge the denominator vanishes; the
    cycle flow there is necessarily zero, so rhs is defined as 0.
    """
    f_c = np.asarray(f_c, dtype=np.float64)
    inc = build_incidence(net)
    if np.max(np.abs(inc @ f_c), initial=0.0) > BALANCE_TOL:
        raise ValueError("not a cycle flow: E f != 0")
    k_a = float(net.couplings[edge])
    omega = resistance_distance(net, edge)
    lhs = k_inner(net, f_c, f_c)
    denom = k_a * (1.0 - k_a * omega)
    if denom <= 1e-12:
        if abs(f_c[edge]) > BALANCE_TOL:
            raise ValueError("bridge edge carries nonzero cycle flow")
        return lhs, 0.0, True
    rhs = f_c[edge] ** 2 / denom
    return lhs, rhs, lhs >= rhs - 1e-10
