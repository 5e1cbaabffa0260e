"""Network container: oriented weighted graph with nodal power injections."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BALANCE_RTOL = 1e-9


class NetworkError(ValueError):
    """Raised when a network violates a structural invariant."""


@dataclass(frozen=True)
class Network:
    """Connected graph with a fixed edge orientation.

    Edge e runs from ``tails[e]`` to ``heads[e]`` and carries coupling
    (capacity) ``couplings[e] > 0``.  ``injections`` holds the balanced
    per-unit real power injection of each node.  Parallel edges are
    allowed and keep distinct indices; self-loops are rejected.
    """

    tails: np.ndarray
    heads: np.ndarray
    couplings: np.ndarray
    injections: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        tails = np.asarray(self.tails, dtype=np.int64)
        heads = np.asarray(self.heads, dtype=np.int64)
        couplings = np.asarray(self.couplings, dtype=np.float64)
        injections = np.asarray(self.injections, dtype=np.float64)
        n = injections.size
        m = tails.size
        if n < 2:
            raise NetworkError("network needs at least 2 nodes")
        if heads.size != m or couplings.size != m:
            raise NetworkError("edge arrays must have equal length")
        if m == 0:
            raise NetworkError("network needs at least 1 edge")
        if tails.min(initial=0) < 0 or heads.min(initial=0) < 0 \
                or tails.max(initial=0) >= n or heads.max(initial=0) >= n:
            raise NetworkError("edge endpoint out of range")
        if np.any(tails == heads):
            raise NetworkError("self-loops are not allowed")
        if not np.all(np.isfinite(couplings)) or np.any(couplings <= 0.0):
            raise NetworkError("all couplings must be finite and > 0")
        if not np.all(np.isfinite(injections)):
            raise NetworkError("injections must be finite")
        total = abs(injections.sum())
        if total > BALANCE_RTOL * np.abs(injections).sum():
            raise NetworkError(
                f"injections not balanced: sum = {injections.sum():.3e}")
        labels = self.labels or tuple(str(i) for i in range(n))
        if len(labels) != n:
            raise NetworkError("one label per node required")
        if not _connected(n, tails, heads):
            raise NetworkError("graph is not connected")
        for arr in (tails, heads, couplings, injections):
            arr.setflags(write=False)
        object.__setattr__(self, "tails", tails)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "injections", injections)
        object.__setattr__(self, "labels", labels)

    @property
    def node_count(self) -> int:
        return self.injections.size

    @property
    def edge_count(self) -> int:
        return self.tails.size

    @property
    def cycle_count(self) -> int:
        return self.edge_count - self.node_count + 1

    def edges(self):
        """Iterate (tail, head, coupling) triples in edge order."""
        return zip(self.tails.tolist(), self.heads.tolist(),
                   self.couplings.tolist())


def _connected(n: int, tails: np.ndarray, heads: np.ndarray) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in zip(tails.tolist(), heads.tolist()):
        adj[u].append(v)
        adj[v].append(u)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def adjacency_lists(net: Network) -> list[list[tuple[int, int, int]]]:
    """Per-node list of (neighbor, edge index, orientation sign).

    Sign is +1 when the edge leaves the node in its stored orientation.
    """
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(net.node_count)]
    for e, (u, v) in enumerate(zip(net.tails.tolist(), net.heads.tolist())):
        adj[u].append((v, e, +1))
        adj[v].append((u, e, -1))
    return adj
