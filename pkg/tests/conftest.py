"""Shared fixtures: random network generators and an independent
phase-space oracle used to cross-check the flow-variable solver."""

from __future__ import annotations

import numpy as np
import pytest

from syncflow import Network, build_incidence, solve_linear


def make_net(tails, heads, couplings, injections, labels=()):
    return Network(
        tails=np.asarray(tails, dtype=np.int64),
        heads=np.asarray(heads, dtype=np.int64),
        couplings=np.asarray(couplings, dtype=np.float64),
        injections=np.asarray(injections, dtype=np.float64),
        labels=tuple(labels),
    )


def random_tree_edges(rng: np.random.Generator, n: int):
    """Uniform-ish random labelled tree: attach node i to a random
    earlier node."""
    tails, heads = [], []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        if rng.random() < 0.5:
            tails.append(j), heads.append(i)
        else:
            tails.append(i), heads.append(j)
    return tails, heads


def random_network(rng: np.random.Generator, n: int, extra_edges: int = 0,
                   target_loading: float | None = None) -> Network:
    """Random connected graph (tree plus chords) with random couplings and
    balanced injections.  When ``target_loading`` is given, injections are
    rescaled so the linear flow's maximum loading equals it."""
    tails, heads = random_tree_edges(rng, n)
    existing = {frozenset((t, h)) for t, h in zip(tails, heads)}
    attempts = 0
    added = 0
    while added < extra_edges and attempts < 50 * (extra_edges + 1):
        attempts += 1
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u == v or frozenset((u, v)) in existing:
            continue
        existing.add(frozenset((u, v)))
        tails.append(u), heads.append(v)
        added += 1
    couplings = rng.uniform(0.5, 2.0, size=len(tails))
    p = rng.uniform(-1.0, 1.0, size=n)
    p -= p.mean()
    net = make_net(tails, heads, couplings, p)
    if target_loading is not None:
        f_lin = solve_linear(net).flows
        peak = float(np.max(np.abs(f_lin) / net.couplings))
        if peak > 0.0:
            net = make_net(tails, heads, couplings,
                           p * (target_loading / peak))
    return net


def random_tree_network(rng: np.random.Generator, n: int,
                        target_loading: float = 0.7) -> Network:
    return random_network(rng, n, extra_edges=0,
                          target_loading=target_loading)


def fixed_point_residual(net: Network, flows: np.ndarray) -> float:
    """Max nodewise violation of p = E f."""
    inc = build_incidence(net)
    return float(np.max(np.abs(inc @ flows - net.injections)))


def phase_newton_oracle(net: Network, theta0=None, tol: float = 1e-12,
                        max_iter: int = 200):
    """Damped Newton on the phase-space fixed-point equations
    p_n = sum_m K_nm sin(theta_n - theta_m) with node 0 grounded.

    Independent of the flow-variable solver.  Returns zero-mean phases or
    None when not converged to a normal state.
    """
    inc = build_incidence(net)
    k = net.couplings
    p = net.injections
    if theta0 is None:
        theta0 = solve_linear(net).theta
    theta = np.array(theta0, dtype=np.float64)
    theta -= theta[0]

    def residual(th):
        return inc @ (k * np.sin(inc.T @ th)) - p

    g = residual(theta)
    for _ in range(max_iter):
        norm = float(np.max(np.abs(g)))
        if norm <= tol:
            cosines = np.cos(inc.T @ theta)
            if np.all(cosines > 0.0):
                return theta - theta.mean()
            return None
        weights = k * np.cos(inc.T @ theta)
        jac = inc @ (weights[:, None] * inc.T)
        try:
            step = np.linalg.solve(jac[1:, 1:], -g[1:])
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        while t > 1e-14:
            trial = theta.copy()
            trial[1:] += t * step
            g_trial = residual(trial)
            if np.max(np.abs(g_trial)) < norm:
                theta, g = trial, g_trial
                break
            t *= 0.5
        else:
            return None
    return None


@pytest.fixture(scope="session")
def case30_network():
    from syncflow.experiments import default_case_network
    return default_case_network()
