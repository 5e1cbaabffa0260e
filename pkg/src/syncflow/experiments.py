"""Monte-Carlo and sweep experiments emitting plot-ready CSV.

Four experiments are provided, each reproducing one figure-style study:

* ``fig1-approx-error``   — per-edge error of the linear flow and of the
  algebraically corrected flow against the exact flow, swept over a load
  scaling factor.
* ``fig2-bound-tightness`` — sampled ratios of the rigorous error bounds to
  the true error K-norm.
* ``fig3-gradient-step``  — error K-norm along a projected descent step of
  size gamma, plus the located optimal step size.
* ``fig4-ring-maxload``   — frequency with which the linear flow
  underestimates the maximum line loading on rings of different sizes.

All experiments are deterministic under a fixed seed: every sample draws
from its own child stream spawned from the root seed, so the output is
byte-identical regardless of evaluation order.  Infeasible or unsolvable
samples are rejected and resampled; rejection counts are logged in the CSV
metadata header.
"""

from __future__ import annotations

import hashlib
import importlib.resources

import numpy as np

from . import __version__
from .approx import (
    error_bounds,
    gradient_step,
    improved_approximation,
    optimal_step_size,
)
from .caseio import fmt, parse_matpower, to_network
from .graphcore import cycle_basis, grounded_factor, k_norm, projectors
from .linflow import solve_linear
from .network import Network
from .solver import Classification, solve_base, solve_winding

EXPERIMENTS = (
    "fig1-approx-error",
    "fig2-bound-tightness",
    "fig3-gradient-step",
    "fig4-ring-maxload",
)

DEFAULT_SAMPLES = 10_000
DEFAULT_RING_SIZES = (3, 4, 6, 8, 10, 14, 20)
DEFAULT_PF_GRID = tuple(float(v) for v in range(1, 21))
DEFAULT_FIG3_PF = (1.0, 10.0)
GAMMA_GRID = tuple(0.05 * i for i in range(1, 41))
MAX_REJECTIONS_PER_SAMPLE = 1000


def default_case_network(p_f: float = 1.0) -> Network:
    """The packaged 30-bus test case as a Network."""
    text = (importlib.resources.files("syncflow") / "data" / "case30.m"
            ).read_text()
    return to_network(parse_matpower(text), p_f=p_f)


def case_hash() -> str:
    text = (importlib.resources.files("syncflow") / "data" / "case30.m"
            ).read_text()
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def ring_network(n: int, coupling: float = 1.0,
                 injections=None) -> Network:
    """Cycle graph 0-1-...-(n-1)-0 with uniform coupling."""
    tails = np.arange(n, dtype=np.int64)
    heads = (tails + 1) % n
    k = np.full(n, coupling, dtype=np.float64)
    p = np.zeros(n) if injections is None else np.asarray(injections,
                                                          dtype=np.float64)
    return Network(tails=tails, heads=heads, couplings=k, injections=p)


def render_csv(columns, rows, metadata) -> str:
    """Serialize rows (with '#'-prefixed metadata header) to CSV text."""
    lines = [f"# {key}={value}" for key, value in metadata.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(
            fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\r\n".join(lines) + "\r\n"


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _balanced_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    p = rng.uniform(-1.0, 1.0, size=n)
    return p - p.mean()


def _with_injections(net: Network, p: np.ndarray) -> Network:
    return Network(tails=net.tails, heads=net.heads,
                   couplings=net.couplings, injections=p,
                   labels=net.labels)


def _solve_interior(net, basis, f_lin):
    """z = 0 solve started from the linear flow; None when no interior
    normal state is reached."""
    k = net.couplings
    if np.max(np.abs(f_lin) / k) >= 1.0 - 1e-9:
        return None
    try:
        out = solve_winding(net, basis, f_lin,
                            np.zeros(basis.count, dtype=np.int64))
    except RuntimeError:
        return None
    if out.classification is not Classification.INTERIOR:
        return None
    return out


def _sample_case_solution(net, basis, factor, rng,
                          loading_range=(0.1, 0.9)):
    """Draw a balanced injection, rescale it to a random linear loading
    level, and solve; returns (network, f_lin, f_rp, rejections)."""
    rejections = 0
    for _ in range(MAX_REJECTIONS_PER_SAMPLE):
        p = _balanced_uniform(rng, net.node_count)
        f_raw = solve_linear(_with_injections(net, p), factor=factor).flows
        peak = np.max(np.abs(f_raw) / net.couplings)
        if peak <= 0.0:
            rejections += 1
            continue
        target = rng.uniform(*loading_range)
        scale = target / peak
        sample_net = _with_injections(net, p * scale)
        f_lin = f_raw * scale
        out = _solve_interior(sample_net, basis, f_lin)
        if out is None:
            rejections += 1
            continue
        return sample_net, f_lin, out.flows, rejections
    raise RuntimeError("sampling failed to find a solvable injection")


def run_fig1(net: Network | None = None, pf_values=DEFAULT_PF_GRID,
             seed: int = 0) -> str:
    """Per-edge |f_lin − f_rp| and |f_approx − f_rp| for each load factor.

    Load factors whose scaled case is infeasible (or whose linear flow
    exceeds a line limit, leaving the corrected flow undefined) are skipped
    and listed in the metadata.
    """
    base = default_case_network() if net is None else net
    basis = cycle_basis(base)
    factor = grounded_factor(base)
    rows = []
    skipped = []
    for pf in pf_values:
        pf = float(pf)
        scaled = _with_injections(base, base.injections * pf)
        f_lin = solve_linear(scaled, factor=factor).flows
        out = _solve_interior(scaled, basis, f_lin)
        if out is None:
            skipped.append(fmt(pf))
            continue
        f_approx = improved_approximation(scaled, basis, f_lin)
        f_rp = out.flows
        for e in range(scaled.edge_count):
            rows.append((
                fmt(pf), e, int(scaled.tails[e]), int(scaled.heads[e]),
                float(scaled.couplings[e]),
                float(abs(f_lin[e] - f_rp[e])),
                float(abs(f_approx[e] - f_rp[e])),
            ))
    metadata = {
        "experiment": "fig1-approx-error",
        "version": __version__,
        "seed": seed,
        "case_hash": case_hash(),
        "pf_values": ";".join(fmt(float(v)) for v in pf_values),
        "pf_skipped_infeasible": ";".join(skipped) if skipped else "none",
    }
    columns = ("pf", "edge", "tail", "head", "K", "err_lin", "err_approx")
    return render_csv(columns, rows, metadata)


def run_fig2(net: Network | None = None, samples: int = DEFAULT_SAMPLES,
             seed: int = 0) -> str:
    """Sampled ratios bound/‖ξ‖_K for the plain and the projected bound."""
    base = default_case_network() if net is None else net
    basis = cycle_basis(base)
    factor = grounded_factor(base)
    _, pi_cycle = projectors(base)
    rows = []
    total_rejections = 0
    for i in range(samples):
        rng = _sample_rng(seed, i)
        sample_net, f_lin, f_rp, rej = _sample_case_solution(
            base, basis, factor, rng)
        total_rejections += rej
        zeta, bound_simple, bound_projected = error_bounds(
            sample_net, f_lin, pi_cycle=pi_cycle)
        xi = k_norm(sample_net, f_rp - f_lin)
        ratio_proj = bound_projected / xi if xi > 0.0 else float("inf")
        ratio_simple = bound_simple / xi if xi > 0.0 else float("inf")
        rows.append((i, xi, float(bound_projected), float(bound_simple),
                     float(ratio_proj), float(ratio_simple)))
    metadata = {
        "experiment": "fig2-bound-tightness",
        "version": __version__,
        "seed": seed,
        "samples": samples,
        "case_hash": case_hash(),
        "rejections": total_rejections,
    }
    columns = ("sample", "xi_knorm", "bound_projected", "bound_simple",
               "ratio_projected", "ratio_simple")
    return render_csv(columns, rows, metadata)


def run_fig3(net: Network | None = None, pf_values=DEFAULT_FIG3_PF,
             seed: int = 0) -> str:
    """Error K-norm after one projected descent step of size gamma,
    swept over gamma, with the golden-section optimum marked."""
    base = default_case_network() if net is None else net
    basis = cycle_basis(base)
    factor = grounded_factor(base)
    _, pi_cycle = projectors(base)
    rows = []
    skipped = []
    for pf in pf_values:
        pf = float(pf)
        scaled = _with_injections(base, base.injections * pf)
        f_lin = solve_linear(scaled, factor=factor).flows
        out = _solve_interior(scaled, basis, f_lin)
        if out is None:
            skipped.append(fmt(pf))
            continue
        f_rp = out.flows
        err0 = k_norm(scaled, f_lin - f_rp)
        rows.append((fmt(pf), 0.0, err0, 0))
        for gamma in GAMMA_GRID:
            stepped = gradient_step(scaled, f_lin, gamma, pi_cycle=pi_cycle)
            rows.append((fmt(pf), float(gamma),
                         k_norm(scaled, stepped - f_rp), 0))
        gamma_opt, err_opt = optimal_step_size(scaled, f_lin, f_rp,
                                               pi_cycle=pi_cycle)
        rows.append((fmt(pf), float(gamma_opt), float(err_opt), 1))
    metadata = {
        "experiment": "fig3-gradient-step",
        "version": __version__,
        "seed": seed,
        "case_hash": case_hash(),
        "pf_values": ";".join(fmt(float(v)) for v in pf_values),
        "pf_skipped_infeasible": ";".join(skipped) if skipped else "none",
    }
    columns = ("pf", "gamma", "error_knorm", "is_optimal")
    return render_csv(columns, rows, metadata)


def run_fig4(ring_sizes=DEFAULT_RING_SIZES, samples: int = DEFAULT_SAMPLES,
             seed: int = 0) -> str:
    """Frequency of max-loading underestimation by the linear flow on
    rings with unit couplings and balanced uniform injections."""
    rows = []
    total_rejections = 0
    for n in ring_sizes:
        n = int(n)
        template = ring_network(n)
        basis = cycle_basis(template)
        factor = grounded_factor(template)
        count = 0
        rejections = 0
        for i in range(samples):
            rng = _sample_rng(seed, n * samples + i)
            for _ in range(MAX_REJECTIONS_PER_SAMPLE):
                p = _balanced_uniform(rng, n)
                sample_net = _with_injections(template, p)
                f_lin = solve_linear(sample_net, factor=factor).flows
                out = _solve_interior(sample_net, basis, f_lin)
                if out is None:
                    out = solve_base(sample_net, basis)
                    if out.classification is not Classification.INTERIOR:
                        rejections += 1
                        continue
                max_rp = np.max(np.abs(out.flows) / sample_net.couplings)
                max_lin = np.max(np.abs(f_lin) / sample_net.couplings)
                if max_rp > max_lin * (1.0 + 1e-9):
                    count += 1
                break
            else:
                raise RuntimeError(
                    f"sampling failed to find a solvable injection (N={n})")
        total_rejections += rejections
        rows.append((n, samples, count, count / samples, rejections))
    metadata = {
        "experiment": "fig4-ring-maxload",
        "version": __version__,
        "seed": seed,
        "samples": samples,
        "ring_sizes": ";".join(str(int(n)) for n in ring_sizes),
        "rejections": total_rejections,
    }
    columns = ("N", "samples", "underestimate_count", "frequency",
               "rejections")
    return render_csv(columns, rows, metadata)


def run_experiment(experiment: str, *, net: Network | None = None,
                   samples: int = DEFAULT_SAMPLES, seed: int = 0,
                   pf_values=None, ring_sizes=None) -> str:
    """Dispatch by experiment id; returns the CSV text."""
    if experiment == "fig1-approx-error":
        return run_fig1(net=net, seed=seed,
                        pf_values=pf_values or DEFAULT_PF_GRID)
    if experiment == "fig2-bound-tightness":
        return run_fig2(net=net, samples=samples, seed=seed)
    if experiment == "fig3-gradient-step":
        return run_fig3(net=net, seed=seed,
                        pf_values=pf_values or DEFAULT_FIG3_PF)
    if experiment == "fig4-ring-maxload":
        return run_fig4(ring_sizes=ring_sizes or DEFAULT_RING_SIZES,
                        samples=samples, seed=seed)
    raise ValueError(f"unknown experiment {experiment!r}; "
                     f"choose from {', '.join(EXPERIMENTS)}")
