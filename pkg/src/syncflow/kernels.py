"""Hot numeric kernels: damped Newton solve over loop-flow amplitudes.

The kernel is compiled with numba when available.  Set ``SYNCFLOW_NUMBA=0``
to force the pure-numpy path (same source, un-jitted); the selection is
made once at import time.
"""
from __future__ import annotations

import os

import numpy as np

ARCSIN_CLAMP = 1e-15
FTB_SHRINK = 0.999  # keep 0.1% of the distance to the boundary per step
ARMIJO_C = 1e-4
PINNED_GAP = 1e-8
PINNED_RUN_LIMIT = 20

STATUS_CONVERGED = 0
STATUS_PINNED = 1
STATUS_MAXITER = 2


def _objective(f, couplings, two_pi_z, amplitudes):
    total = 0.0
    for e in range(f.size):
        k = couplings[e]
        s = f[e] / k
        if s > 1.0 - ARCSIN_CLAMP:
            s = 1.0 - ARCSIN_CLAMP
        elif s < -1.0 + ARCSIN_CLAMP:
            s = -1.0 + ARCSIN_CLAMP
        total += f[e] * np.arcsin(s) + np.sqrt(k * k - (s * k) ** 2) - k
    for a in range(amplitudes.size):
        total -= two_pi_z[a] * amplitudes[a]
    return total


def _newton_cycle(f0, cycle_mat, couplings, two_pi_z, grad_tol, max_iter):
    """Minimize the winding objective over loop amplitudes.

    Returns (amplitudes, flows, grad_inf_norm, iterations, status).
    Iterates stay strictly inside |f_e| < K_e; a run of iterations pinned
    at the boundary signals a boundary optimum.
    """
    m, q = cycle_mat.shape
    amplitudes = np.zeros(q)
    f = f0.copy()
    s = np.empty(m)
    pinned_run = 0
    gnorm = np.inf
    it = 0
    while it < max_iter:
        it += 1
        for e in range(m):
            v = f[e] / couplings[e]
            if v > 1.0 - ARCSIN_CLAMP:
                v = 1.0 - ARCSIN_CLAMP
            elif v < -1.0 + ARCSIN_CLAMP:
                v = -1.0 + ARCSIN_CLAMP
            s[e] = v
        grad = cycle_mat.T @ np.arcsin(s) - two_pi_z
        gnorm = np.max(np.abs(grad))
        if gnorm <= grad_tol:
            return amplitudes, f, gnorm, it, STATUS_CONVERGED
        weights = np.empty(m)
        for e in range(m):
            k = couplings[e]
            weights[e] = 1.0 / np.sqrt(k * k - (s[e] * k) ** 2)
        hess = (cycle_mat * weights.reshape(m, 1)).T @ cycle_mat
        step_l = np.linalg.solve(hess, -grad)
        step_f = cycle_mat @ step_l
        # fraction-to-boundary: largest multiple keeping |f| < K strictly
        t_max = np.inf
        for e in range(m):
            if step_f[e] > 0.0:
                room = (couplings[e] - f[e]) / step_f[e]
            elif step_f[e] < 0.0:
                room = (-couplings[e] - f[e]) / step_f[e]
            else:
                continue
            if room < t_max:
                t_max = room
        t = 1.0
        if FTB_SHRINK * t_max < t:
            t = FTB_SHRINK * t_max
        # Armijo backtracking (halving); the acceptance test tolerates
        # objective rounding noise so the endgame full Newton step is not
        # rejected when the true decrease falls below machine precision
        obj0 = _objective(f, couplings, two_pi_z, amplitudes)
        slope = float(grad @ step_l)
        noise = 1e-14 * (1.0 + abs(obj0))
        accepted = False
        while t > 1e-18:
            trial_l = amplitudes + t * step_l
            trial_f = f0 + cycle_mat @ trial_l
            if _objective(trial_f, couplings, two_pi_z, trial_l) \
                    <= obj0 + ARMIJO_C * t * slope + noise:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # no admissible decrease left: a boundary optimum when pinned,
            # otherwise a genuine stall reported as such
            touching = False
            for e in range(m):
                if abs(f[e]) >= couplings[e] - PINNED_GAP:
                    touching = True
                    break
            if touching:
                return amplitudes, f, gnorm, it, STATUS_PINNED
            return amplitudes, f, gnorm, it, STATUS_MAXITER
        amplitudes = amplitudes + t * step_l
        f = f0 + cycle_mat @ amplitudes
        touching = False
        for e in range(m):
            if abs(f[e]) >= couplings[e] - PINNED_GAP:
                touching = True
                break
        if touching:
            pinned_run += 1
        else:
            pinned_run = 0
        if pinned_run >= PINNED_RUN_LIMIT:
            return amplitudes, f, gnorm, it, STATUS_PINNED
    return amplitudes, f, gnorm, it, STATUS_MAXITER


NUMBA_ENABLED = os.environ.get("SYNCFLOW_NUMBA", "1") != "0"
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    _objective = njit(cache=True)(_objective)
    newton_cycle = njit(cache=True)(_newton_cycle)
else:
    newton_cycle = _newton_cycle

newton_cycle_py = _newton_cycle
