"""Convex-programming solver for all normal synchronized states.

Each candidate state is labeled by an integer winding vector; the state is
the minimizer of a strictly convex objective over loop-flow amplitudes.
The minimizer either lies in the interior of the line-limit polytope (a
valid state), on its boundary with positive multipliers (no state for that
winding), or on the boundary with vanishing multipliers (a bifurcation).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .feasibility import FeasibilityCertificate, max_flow_feasible
from .graphcore import CycleBasis, build_incidence, cycle_basis, grounded_factor
from .linflow import solve_linear
from .network import Network, adjacency_lists

KCL_TOL = 1e-9
KKT_TOL = 1e-8
GRAD_TOL = 1e-10
MAX_ITER = 200
BOUNDARY_GAP = 1e-8
CHORD_RESIDUAL_TOL = 1e-6


class Classification(Enum):
    INTERIOR = "interior-solution"
    BOUNDARY_NO_SOLUTION = "boundary-no-solution"
    BIFURCATION = "bifurcation-solution"
    INFEASIBLE = "infeasible"


class EnumerationCapError(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(
            f"winding enumeration would visit {count} vectors, "
            f"exceeding the cap of {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class SolveOutcome:
    classification: Classification
    flows: np.ndarray | None
    phases: np.ndarray | None
    winding: tuple[int, ...] | None
    mu: np.ndarray | None
    nu: np.ndarray | None
    node_multipliers: np.ndarray | None
    iterations: int
    grad_norm: float
    certificate: FeasibilityCertificate | None = None

    @property
    def is_state(self) -> bool:
        return self.classification in (Classification.INTERIOR,
                                       Classification.BIFURCATION)


def realpower_objective(net: Network, f: np.ndarray) -> float:
    """Strictly convex edge-wise objective whose constrained minimizer is
    the synchronized state: sum_e f_e arcsin(f_e/K_e) + sqrt(K_e^2-f_e^2) - K_e."""
    f = np.asarray(f, dtype=np.float64)
    k = net.couplings
    if np.any(np.abs(f) > k * (1.0 + 1e-9)):
        raise ValueError("flow exceeds a line limit")
    s = np.clip(f / k, -1.0, 1.0)
    return float(np.sum(f * np.arcsin(s) + np.sqrt(k * k - (s * k) ** 2) - k))


def winding_bounds(basis: CycleBasis) -> np.ndarray:
    """Per-cycle winding limit floor(cycle length / 4)."""
    return basis.lengths // 4


def enumerate_windings(basis: CycleBasis, cap: int = 10 ** 6):
    """All admissible winding vectors (Cartesian product of per-cycle ranges)."""
    bounds = winding_bounds(basis)
    count = int(np.prod(2 * bounds + 1)) if basis.count else 1
    if count > cap:
        raise EnumerationCapError(count, cap)
    ranges = [range(-int(b), int(b) + 1) for b in bounds]
    return [tuple(z) for z in itertools.product(*ranges)]


def winding_vector(net: Network, basis: CycleBasis, f: np.ndarray):
    """Winding label of a flow: cycle sums of arcsin(f/K) over 2*pi.

    Returns (z, residual) where residual is the worst distance of a cycle
    sum from 2*pi*z."""
    s = np.clip(f / net.couplings, -1.0, 1.0)
    sums = basis.matrix.T @ np.arcsin(s)
    z = np.rint(sums / (2.0 * np.pi)).astype(int)
    residual = float(np.max(np.abs(sums - 2.0 * np.pi * z), initial=0.0))
    return tuple(int(v) for v in z), residual


def recover_phases(net: Network, f: np.ndarray, gauge: str = "zero-mean",
                   slack: int = 0) -> np.ndarray:
    """Nodal phases of a fixed-point flow (normal branch).

    Walks a BFS spanning tree accumulating arcsin(f_e/K_e); chord residuals
    must be integer multiples of 2*pi, otherwise the flow is no fixed point.
    """
    f = np.asarray(f, dtype=np.float64)
    k = net.couplings
    if np.any(np.abs(f) > k * (1.0 + 1e-9)):
        raise ValueError("flow exceeds a line limit")
    angles = np.arcsin(np.clip(f / k, -1.0, 1.0))
    adj = adjacency_lists(net)
    theta = np.zeros(net.node_count)
    seen = np.zeros(net.node_count, dtype=bool)
    seen[0] = True
    tree_edges: set[int] = set()
    stack = [0]
    while stack:
        u = stack.pop()
        for v, e, sign in adj[u]:
            if not seen[v]:
                seen[v] = True
                # theta_tail - theta_head = arcsin(f_e / K_e)
                theta[v] = theta[u] - sign * angles[e]
                tree_edges.add(e)
                stack.append(v)
    for e in range(net.edge_count):
        if e in tree_edges:
            continue
        r = theta[net.tails[e]] - theta[net.heads[e]] - angles[e]
        if abs(r - 2.0 * np.pi * round(r / (2.0 * np.pi))) > CHORD_RESIDUAL_TOL:
            raise ValueError(
                "flow violates the cycle condition; not a fixed point")
    inc = build_incidence(net)
    if np.max(np.abs(k * np.sin(inc.T @ theta) - f)) > KKT_TOL:
        raise ValueError("recovered phases do not reproduce the flow")
    if gauge == "zero-mean":
        return theta - theta.mean()
    if gauge == "slack":
        return theta - theta[slack]
    raise ValueError(f"unknown gauge: {gauge!r}")


def stability_check(net: Network, theta: np.ndarray):
    """Sufficient stability test: cos(theta_n - theta_m) > 0 on every edge.

    Also returns the sorted eigenvalues of the cosine-weighted Laplacian;
    for normal states exactly one is ~0 and the rest are positive.
    """
    theta = np.asarray(theta, dtype=np.float64)
    inc = build_incidence(net)
    diffs = inc.T @ theta
    cosines = np.cos(diffs)
    lap = inc @ ((net.couplings * cosines)[:, None] * inc.T)
    eigenvalues = np.linalg.eigvalsh(lap)
    return bool(np.all(cosines > 0.0)), eigenvalues


def _interior_point(net: Network, f0: np.ndarray, f_lin: np.ndarray):
    """Point on the segment from f0 to f_lin with minimal max loading.

    The difference is a cycle flow, so every point satisfies the balance;
    max loading is convex along the segment (golden-section search).
    """
    k = net.couplings

    def load(t):
        return float(np.max(np.abs(f0 + t * (f_lin - f0)) / k))

    lo, hi = 0.0, 1.0
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = hi - phi * (hi - lo), lo + phi * (hi - lo)
    fa, fb = load(a), load(b)
    for _ in range(200):
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = hi - phi * (hi - lo)
            fa = load(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + phi * (hi - lo)
            fb = load(b)
    t = 0.5 * (lo + hi)
    return f0 + t * (f_lin - f0), load(t)


def solve_winding(net: Network, basis: CycleBasis, f0: np.ndarray,
                  z, grad_tol: float = GRAD_TOL,
                  max_iter: int = MAX_ITER) -> SolveOutcome:
    """Minimize the winding objective for one integer winding vector."""
    f0 = np.asarray(f0, dtype=np.float64)
    k = net.couplings
    inc = build_incidence(net)
    if np.max(np.abs(inc @ f0 - net.injections)) > KCL_TOL:
        raise ValueError("reference flow violates the nodal balance")
    if np.any(np.abs(f0) > k * (1.0 + 1e-9)):
        raise ValueError("reference flow violates a line limit")
    z = np.asarray(z, dtype=np.int64).reshape(basis.count)
    bounds = winding_bounds(basis)
    if np.any(np.abs(z) > bounds):
        raise ValueError(
            f"winding vector {tuple(z)} outside the admissible bounds "
            f"{tuple(int(b) for b in bounds)}")

    if basis.count == 0:
        return _classify(net, basis, f0, z, iterations=0, grad_norm=0.0)

    if np.max(np.abs(f0) / k) >= 1.0 - 1e-12:
        f_lin = solve_linear(net).flows
        f0, _ = _interior_point(net, f0, f_lin)
        f0 = np.clip(f0, -k * (1.0 - 1e-12), k * (1.0 - 1e-12))

    cycle_mat = basis.matrix.astype(np.float64)
    _, f, gnorm, iters, status = kernels.newton_cycle(
        f0, cycle_mat, k, 2.0 * np.pi * z.astype(np.float64),
        grad_tol, max_iter)
    if status == kernels.STATUS_MAXITER and gnorm > KKT_TOL \
            and np.all(np.abs(f) < k - BOUNDARY_GAP):
        raise RuntimeError(
            f"Newton solve stalled in the interior (|grad| = {gnorm:.2e})")
    return _classify(net, basis, f, z, iterations=iters, grad_norm=gnorm)


def _classify(net: Network, basis: CycleBasis, f: np.ndarray, z,
              iterations: int, grad_norm: float) -> SolveOutcome:
    k = net.couplings
    active = np.abs(f) >= k - BOUNDARY_GAP
    mu = np.zeros(net.edge_count)
    nu = np.zeros(net.edge_count)
    if not active.any():
        phases = recover_phases(net, f)
        return SolveOutcome(
            classification=Classification.INTERIOR, flows=f, phases=phases,
            winding=tuple(int(v) for v in z), mu=mu, nu=nu,
            node_multipliers=phases, iterations=iterations,
            grad_norm=grad_norm)
    # boundary-adjacent: read multipliers off the stationarity condition
    f_snap = np.where(active, np.sign(f) * k, f)
    s = np.clip(f_snap / k, -1.0, 1.0)
    residual = 2.0 * np.pi * np.asarray(z, dtype=np.float64) \
        - basis.matrix.T @ np.arcsin(s)
    idx = np.flatnonzero(active)
    if basis.count and idx.size:
        coeff = basis.matrix[idx, :].T.astype(np.float64)
        m_active, *_ = np.linalg.lstsq(coeff, residual, rcond=None)
        stat_res = float(np.max(np.abs(coeff @ m_active - residual),
                                initial=0.0))
    else:
        m_active = np.zeros(0)
        stat_res = float(np.max(np.abs(residual), initial=0.0))
    for j, e in enumerate(idx):
        m = float(m_active[j]) if m_active.size else 0.0
        if f_snap[e] > 0:
            mu[e] = m
        else:
            nu[e] = -m
    multiplier_max = float(np.max(np.abs(m_active), initial=0.0))
    if multiplier_max <= KKT_TOL and stat_res <= KKT_TOL:
        phases = recover_phases(net, f_snap)
        return SolveOutcome(
            classification=Classification.BIFURCATION, flows=f_snap,
            phases=phases, winding=tuple(int(v) for v in z),
            mu=np.maximum(mu, 0.0), nu=np.maximum(nu, 0.0),
            node_multipliers=phases, iterations=iterations,
            grad_norm=grad_norm)
    return SolveOutcome(
        classification=Classification.BOUNDARY_NO_SOLUTION, flows=f_snap,
        phases=None, winding=tuple(int(v) for v in z),
        mu=np.maximum(mu, 0.0), nu=np.maximum(nu, 0.0),
        node_multipliers=None, iterations=iterations, grad_norm=grad_norm)


def solve_base(net: Network, basis: CycleBasis | None = None) -> SolveOutcome:
    """The z = 0 state (the flow-variable program and the cycle-variable
    program at z = 0 share their interior solution)."""
    if basis is None:
        basis = cycle_basis(net)
    certificate = max_flow_feasible(net)
    if not certificate.feasible:
        return SolveOutcome(
            classification=Classification.INFEASIBLE, flows=None, phases=None,
            winding=None, mu=None, nu=None, node_multipliers=None,
            iterations=0, grad_norm=np.inf, certificate=certificate)
    f0 = _reference_flow(net, certificate)
    out = solve_winding(net, basis, f0,
                        np.zeros(basis.count, dtype=np.int64))
    return SolveOutcome(
        classification=out.classification, flows=out.flows,
        phases=out.phases, winding=out.winding, mu=out.mu, nu=out.nu,
        node_multipliers=out.node_multipliers, iterations=out.iterations,
        grad_norm=out.grad_norm, certificate=certificate)


def _reference_flow(net: Network, certificate: FeasibilityCertificate):
    k = net.couplings
    f_lin = solve_linear(net).flows
    if np.max(np.abs(f_lin) / k) < 1.0 - 1e-12:
        return f_lin
    f0, loading = _interior_point(net, certificate.flows, f_lin)
    if loading >= 1.0:
        f0 = certificate.flows
    return np.clip(f0, -k * (1.0 - 1e-12), k * (1.0 - 1e-12))


@dataclass(frozen=True)
class NormalStates:
    """All normal states keyed by their verified winding vector."""

    states: dict[tuple[int, ...], SolveOutcome]
    certificate: FeasibilityCertificate
    attempts: int


def find_all_normal_states(net: Network, basis: CycleBasis | None = None,
                           cap: int = 10 ** 6) -> NormalStates:
    """Solve one convex program per admissible winding vector and collect
    every interior or bifurcation outcome."""
    if basis is None:
        basis = cycle_basis(net)
    certificate = max_flow_feasible(net)
    if not certificate.feasible:
        return NormalStates(states={}, certificate=certificate, attempts=0)
    candidates = enumerate_windings(basis, cap=cap)
    f0 = _reference_flow(net, certificate)
    base = solve_winding(net, basis, f0, np.zeros(basis.count,
                                                  dtype=np.int64))
    if base.is_state:
        f0 = base.flows
    states: dict[tuple[int, ...], SolveOutcome] = {}
    for z in candidates:
        out = solve_winding(net, basis, f0, z)
        if not out.is_state:
            continue
        label, residual = winding_vector(net, basis, out.flows)
        if residual > KKT_TOL and out.classification is Classification.INTERIOR:
            raise RuntimeError(
                f"state for z = {z} has cycle-condition residual {residual:.2e}")
        states[label] = out
    return NormalStates(states=states, certificate=certificate,
                        attempts=len(candidates))
