"""Closed-form improvements on the linear flow and rigorous error bounds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphcore import (CycleBasis, cycle_basis, k_norm, projectors,
                        resistance_distance)
from .linflow import solve_linear
from .network import Network
from .solver import Classification, solve_base

DOMAIN_SLACK = 1e-9


def _check_domain(k, f):
    if np.any(np.abs(f) > np.asarray(k) * (1.0 + DOMAIN_SLACK)):
        raise ValueError("flow exceeds a line limit")


def g_function(k_e: float, f_e: float) -> float:
    """Convex gap between the synchronization objective and its quadratic
    approximation on one edge; zero at f = 0, (pi-3) K/2 at |f| = K."""
    _check_domain(k_e, f_e)
    s = min(max(f_e / k_e, -1.0), 1.0)
    return float(f_e * np.arcsin(s) + np.sqrt(k_e ** 2 - (s * k_e) ** 2)
                 - k_e - f_e ** 2 / (2.0 * k_e))


def g_prime(k_e: float, f_e: float) -> float:
    """Derivative of the gap: arcsin(f/K) - f/K (odd in f)."""
    _check_domain(k_e, f_e)
    s = min(max(f_e / k_e, -1.0), 1.0)
    return float(np.arcsin(s) - s)


def loading_indicator(k_e: float, f_e: float) -> float:
    """Normalized gap G(f)/G(K): 0 at no load, 1 at the line limit,
    monotone in |f|, close to zero below half load."""
    g_max = (np.pi - 3.0) * k_e / 2.0
    return g_function(k_e, f_e) / g_max


def improved_approximation(net: Network, basis: CycleBasis,
                           f_lin: np.ndarray) -> np.ndarray:
    """One Newton-style correction of the linear flow in the cycle space.

    Solves the quadratic model of the synchronization objective around
    f_lin for the loop amplitudes; the result satisfies the nodal balance
    exactly and is independent of the basis choice.
    """
    f_lin = np.asarray(f_lin, dtype=np.float64)
    k = net.couplings
    if np.any(np.abs(f_lin) >= k):
        raise ValueError("linear flow already violates a line limit")
    if basis.count == 0:
        return f_lin.copy()
    cmat = basis.matrix.astype(np.float64)
    k_red = 1.0 / np.sqrt(k * k - f_lin * f_lin)
    gram = (cmat * k_red[:, None]).T @ cmat
    rhs = -cmat.T @ np.arcsin(f_lin / k)
    amplitudes = np.linalg.solve(gram, rhs)
    return f_lin + cmat @ amplitudes


def projected_descent_direction(net: Network, f: np.ndarray,
                                pi_cycle: np.ndarray) -> np.ndarray:
    """Cycle-space projection of the objective gradient in the K-metric.

    The direction K arcsin(f/K) projected by Pi_cycle vanishes exactly at
    the minimizer and preserves the nodal balance for every step size.
    """
    f = np.asarray(f, dtype=np.float64)
    k = net.couplings
    _check_domain(k, f)
    return pi_cycle @ (k * np.arcsin(np.clip(f / k, -1.0, 1.0)))


def gradient_step(net: Network, f: np.ndarray, gamma: float,
                  pi_cycle: np.ndarray | None = None) -> np.ndarray:
    """One projected gradient step f' = f - gamma * Pi_cycle grad."""
    if pi_cycle is None:
        _, pi_cycle = projectors(net)
    return np.asarray(f, dtype=np.float64) \
        - gamma * projected_descent_direction(net, f, pi_cycle)


def optimal_step_size(net: Network, f: np.ndarray, f_ref: np.ndarray,
                      pi_cycle: np.ndarray | None = None,
                      gamma_max: float = 2.0):
    """Golden-section search of the step size minimizing the K-norm error
    against a reference flow.  Returns (gamma_star, error_at_star)."""
    if pi_cycle is None:
        _, pi_cycle = projectors(net)
    direction = projected_descent_direction(net, f, pi_cycle)

    def err(gamma):
        return k_norm(net, f - gamma * direction - f_ref)

    lo, hi = 0.0, gamma_max
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = hi - phi * (hi - lo), lo + phi * (hi - lo)
    fa, fb = err(a), err(b)
    for _ in range(120):
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = hi - phi * (hi - lo)
            fa = err(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + phi * (hi - lo)
            fb = err(b)
    gamma = 0.5 * (lo + hi)
    return float(gamma), float(err(gamma))


def descent_direction_heuristic(net: Network, f_lin: np.ndarray,
                                pi_cycle: np.ndarray | None = None,
                                f_rp: np.ndarray | None = None):
    """Per-edge sign prediction from the first projected gradient step.

    A positive entry predicts that the true flow lies below the linear
    flow on that edge.  Heuristic only; when the true flow is supplied the
    empirical agreement fraction over the predicted edges is returned too.
    """
    if pi_cycle is None:
        _, pi_cycle = projectors(net)
    direction = projected_descent_direction(net, f_lin, pi_cycle)
    signs = np.sign(np.where(np.abs(direction) > 1e-12, direction, 0.0))
    if f_rp is None:
        return signs, None
    predicted = signs != 0
    if not predicted.any():
        return signs, None
    agree = np.sign(np.asarray(f_lin) - np.asarray(f_rp))[predicted] \
        == signs[predicted]
    return signs, float(np.mean(agree))


def error_bounds(net: Network, f_lin: np.ndarray,
                 pi_cycle: np.ndarray | None = None):
    """Linearization-gap vector and the two rigorous K-norm error bounds.

    Returns (zeta, bound_simple, bound_projected) with
    bound_projected <= bound_simple.
    """
    f_lin = np.asarray(f_lin, dtype=np.float64)
    k = net.couplings
    if np.any(np.abs(f_lin) >= k):
        raise ValueError("linear flow must be strictly inside the limits")
    if pi_cycle is None:
        _, pi_cycle = projectors(net)
    zeta = k * (np.arcsin(f_lin / k) - f_lin / k)
    return zeta, k_norm(net, zeta), k_norm(net, pi_cycle @ zeta)


def per_line_bound(net: Network, f_lin: np.ndarray, edge: int,
                   pi_cycle: np.ndarray | None = None,
                   bound_projected: float | None = None) -> float:
    """Guaranteed per-edge error |f_rp - f_lin| <= sqrt(K_a (1 - K_a Omega_a))
    times the projected bound; zero on bridges."""
    if bound_projected is None:
        _, _, bound_projected = error_bounds(net, f_lin, pi_cycle)
    k_a = float(net.couplings[edge])
    factor = k_a * (1.0 - k_a * resistance_distance(net, edge))
    if factor <= 1e-12:
        return 0.0
    return float(np.sqrt(factor) * bound_projected)


def heavy_load_sums(net: Network, f_rp: np.ndarray, f_lin: np.ndarray):
    """Coupling-weighted sums of the loading indicator for both flows;
    the nonlinear flow never exceeds the linear one."""
    k = net.couplings
    _check_domain(k, f_rp)
    _check_domain(k, f_lin)
    s_rp = float(sum(k[e] * loading_indicator(k[e], f_rp[e])
                     for e in range(net.edge_count)))
    s_lin = float(sum(k[e] * loading_indicator(k[e], f_lin[e])
                      for e in range(net.edge_count)))
    return s_rp, s_lin


@dataclass(frozen=True)
class CycleHomogeneity:
    cycle: int
    top_edge: int
    second_edge: int
    lhs: float
    rhs: float
    holds: bool
    zero_flow: bool


def cycle_homogeneity_check(net: Network, f: np.ndarray, flavor: str,
                            basis: CycleBasis | None = None):
    """Top-two loading homogeneity per basis cycle.

    flavor 'rp' compares arcsin-loadings, 'lin' raw loadings; the heaviest
    line is bounded by (cycle length - 1) times the second heaviest.
    """
    if flavor not in ("rp", "lin"):
        raise ValueError("flavor must be 'rp' or 'lin'")
    if basis is None:
        basis = cycle_basis(net)
    f = np.asarray(f, dtype=np.float64)
    k = net.couplings
    _check_domain(k, f)
    loadings = np.abs(np.clip(f / k, -1.0, 1.0))
    reports = []
    for alpha in range(basis.count):
        edges = np.flatnonzero(basis.matrix[:, alpha])
        length = edges.size
        order = sorted(edges.tolist(),
                       key=lambda e: (-loadings[e], e))
        a, b = order[0], order[1]
        if loadings[a] < 1e-12:
            reports.append(CycleHomogeneity(
                cycle=alpha, top_edge=a, second_edge=b, lhs=0.0, rhs=0.0,
                holds=True, zero_flow=True))
            continue
        if flavor == "rp":
            lhs = float(np.arcsin(loadings[a]))
            rhs = float((length - 1) * np.arcsin(loadings[b]))
        else:
            lhs = float(loadings[a])
            rhs = float((length - 1) * loadings[b])
        reports.append(CycleHomogeneity(
            cycle=alpha, top_edge=a, second_edge=b, lhs=lhs, rhs=rhs,
            holds=lhs <= rhs + 1e-10, zero_flow=False))
    return reports


def max_loading_comparison(net: Network, rel_margin: float = 1e-6):
    """Compare the maximum relative loading of the z = 0 state against the
    linear approximation.  Returns (max_rp, max_lin, underestimated)."""
    base = solve_base(net)
    if base.classification is Classification.INFEASIBLE:
        raise RuntimeError("network is infeasible; no state to compare")
    if not base.is_state:
        raise RuntimeError("no z = 0 state exists for this network")
    k = net.couplings
    max_rp = float(np.max(np.abs(base.flows) / k))
    max_lin = float(np.max(np.abs(solve_linear(net).flows) / k))
    return max_rp, max_lin, max_rp > max_lin * (1.0 + rel_margin)


@dataclass(frozen=True)
class ApproxReport:
    """Linear, improved and exact flows plus the error bounds for one case."""

    f_lin: np.ndarray
    f_approx: np.ndarray
    f_rp: np.ndarray
    zeta: np.ndarray
    xi_norm: float
    bound_simple: float
    bound_projected: float
    per_line_bounds: np.ndarray


def approx_report(net: Network, basis: CycleBasis | None = None,
                  pi_cycle: np.ndarray | None = None) -> ApproxReport:
    """Full comparison of the linear flow, its closed-form improvement and
    the exact z = 0 state, with the rigorous error bounds."""
    if basis is None:
        basis = cycle_basis(net)
    if pi_cycle is None:
        _, pi_cycle = projectors(net)
    f_lin = solve_linear(net).flows
    base = solve_base(net, basis)
    if not base.is_state:
        raise RuntimeError("no z = 0 state; cannot build an approximation "
                           "report")
    f_rp = base.flows
    f_approx = improved_approximation(net, basis, f_lin)
    zeta, bound_simple, bound_projected = error_bounds(net, f_lin, pi_cycle)
    xi = f_rp - f_lin
    k = net.couplings
    # K_a (1 - K_a Omega_a) equals K_a times the projector diagonal
    factors = np.sqrt(np.maximum(k * np.diag(pi_cycle), 0.0))
    return ApproxReport(
        f_lin=f_lin, f_approx=f_approx, f_rp=f_rp, zeta=zeta,
        xi_norm=k_norm(net, xi), bound_simple=bound_simple,
        bound_projected=bound_projected,
        per_line_bounds=factors * bound_projected)
