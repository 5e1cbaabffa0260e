"""Linear (DC) power flow and its quadratic objective."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphcore import build_incidence, grounded_factor, k_inner
from .network import Network


@dataclass(frozen=True)
class LinearSolution:
    """Zero-mean phases and the matching potential flow K E^T theta."""

    theta: np.ndarray
    flows: np.ndarray


def solve_linear(net: Network, factor=None) -> LinearSolution:
    """Minimizer of sum f_e^2 / (2 K_e) under nodal balance; no line limits.

    ``factor`` may carry a precomputed grounded Laplacian factorization
    (see :func:`syncflow.graphcore.grounded_factor`) for repeated solves.
    """
    gf = factor if factor is not None else grounded_factor(net)
    theta = gf.apply_pinv(net.injections)
    flows = net.couplings * (build_incidence(net).T @ theta)
    return LinearSolution(theta=theta, flows=flows)


def linear_objective(net: Network, f: np.ndarray) -> float:
    """Quadratic flow objective: half the squared K-norm of f."""
    return 0.5 * k_inner(net, f, f)
