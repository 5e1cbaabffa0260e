"""Command line interface.

Subcommands
    solve        compute the base synchronized state (or all normal states)
    enumerate    list the admissible winding vectors of a cycle basis
    approx       linear flow, corrected flow and exact flow per edge (CSV)
    bounds       rigorous error-bound report (JSON)
    feasibility  maximum-flow feasibility certificate (JSON)
    experiment   Monte-Carlo / sweep studies emitting plot-ready CSV

Exit codes: 0 success, 2 parse error, 3 infeasible, 4 enumeration cap
exceeded, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .approx import approx_report
from .caseio import (
    CaseFormatError,
    ResultRecord,
    network_from_json,
    parse_matpower,
    to_network,
    write_results_csv,
)
from .experiments import EXPERIMENTS, run_experiment
from .feasibility import max_flow_feasible, partition_check
from .graphcore import cycle_basis
from .network import Network, NetworkError
from .solver import (
    Classification,
    EnumerationCapError,
    enumerate_windings,
    find_all_normal_states,
    recover_phases,
    solve_base,
    stability_check,
    winding_bounds,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_ENUM_CAP = 4
EXIT_NUMERIC = 5


def _parse_pf(text: str) -> list[float]:
    """A single float, a comma list, or an inclusive range start:stop:count."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("range count must be >= 1")
        return [float(v) for v in np.linspace(start, stop, count)]
    return [float(v) for v in text.split(",") if v]


def _load_network(args) -> Network:
    if getattr(args, "case", None):
        with open(args.case, encoding="utf-8") as fh:
            case = parse_matpower(fh.read())
        pf = _parse_pf(args.pf) if getattr(args, "pf", None) else [1.0]
        return to_network(case, p_f=pf[0])
    if getattr(args, "network", None):
        with open(args.network, encoding="utf-8") as fh:
            net = network_from_json(fh.read())
        if getattr(args, "pf", None):
            pf = _parse_pf(args.pf)[0]
            net = Network(tails=net.tails, heads=net.heads,
                          couplings=net.couplings,
                          injections=net.injections * pf,
                          labels=net.labels)
        return net
    raise CaseFormatError("one of --case or --network is required")


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _certificate_dict(cert) -> dict:
    return {
        "feasible": cert.feasible,
        "max_flow_value": cert.max_flow_value,
        "source_power": cert.source_power,
        "cut_nodes": list(cert.cut_nodes) if cert.cut_nodes else None,
        "cut_power": cert.cut_power,
        "cut_capacity": cert.cut_capacity,
    }


def _state_dict(net: Network, out) -> dict:
    loading = np.abs(out.flows) / net.couplings
    phases = out.phases
    normal, eigvals = stability_check(net, phases)
    return {
        "classification": out.classification.value,
        "winding": list(out.winding),
        "flows": [float(v) for v in out.flows],
        "phases": [float(v) for v in phases],
        "max_loading": float(loading.max()),
        "stability": {
            "normal": bool(normal),
            "second_smallest_eigenvalue": float(np.sort(eigvals)[1]),
        },
        "iterations": out.iterations,
        "grad_norm": out.grad_norm,
    }


def cmd_solve(args) -> int:
    net = _load_network(args)
    basis = cycle_basis(net, kind=args.basis)
    if args.all_states:
        result = find_all_normal_states(net, basis)
        if not result.certificate.feasible:
            _emit(args, _json({
                "feasible": False,
                "certificate": _certificate_dict(result.certificate)}))
            return EXIT_INFEASIBLE
        states = []
        for z, out in sorted(result.states.items()):
            entry = _state_dict(net, out)
            if args.gauge != "zero-mean":
                entry["phases"] = [float(v) for v in recover_phases(
                    net, out.flows, gauge=args.gauge)]
            states.append(entry)
        _emit(args, _json({
            "feasible": True,
            "attempts": result.attempts,
            "state_count": len(states),
            "states": states,
        }))
        return EXIT_OK
    out = solve_base(net, basis)
    if out.classification is Classification.INFEASIBLE:
        _emit(args, _json({
            "feasible": False,
            "certificate": _certificate_dict(out.certificate)}))
        return EXIT_INFEASIBLE
    if not out.is_state:
        _emit(args, _json({
            "feasible": True,
            "classification": out.classification.value,
            "state": None,
        }))
        return EXIT_NUMERIC
    entry = _state_dict(net, out)
    if args.gauge != "zero-mean":
        entry["phases"] = [float(v) for v in recover_phases(
            net, out.flows, gauge=args.gauge)]
    _emit(args, _json(entry))
    return EXIT_OK


def cmd_enumerate(args) -> int:
    net = _load_network(args)
    basis = cycle_basis(net, kind=args.basis)
    candidates = enumerate_windings(basis, cap=args.cap)
    _emit(args, _json({
        "cycle_count": basis.count,
        "cycle_lengths": [int(v) for v in basis.lengths],
        "winding_bounds": [int(v) for v in winding_bounds(basis)],
        "candidate_count": len(candidates),
        "candidates": [list(z) for z in candidates],
    }))
    return EXIT_OK


def cmd_approx(args) -> int:
    net = _load_network(args)
    basis = cycle_basis(net, kind=args.basis)
    report = approx_report(net, basis)
    records = [
        ResultRecord(
            edge=e, tail=net.labels[net.tails[e]],
            head=net.labels[net.heads[e]],
            coupling=float(net.couplings[e]),
            f_lin=float(report.f_lin[e]),
            f_approx=float(report.f_approx[e]),
            f_rp=float(report.f_rp[e]),
            loading=float(abs(report.f_rp[e]) / net.couplings[e]),
            bound_per_line=float(report.per_line_bounds[e]))
        for e in range(net.edge_count)
    ]
    _emit(args, write_results_csv(records, metadata={
        "command": "approx", "version": __version__,
        "xi_knorm": report.xi_norm,
        "bound_projected": report.bound_projected,
        "bound_simple": report.bound_simple,
    }))
    return EXIT_OK


def cmd_bounds(args) -> int:
    net = _load_network(args)
    basis = cycle_basis(net, kind=args.basis)
    report = approx_report(net, basis)
    _emit(args, _json({
        "xi_knorm": report.xi_norm,
        "bound_projected": report.bound_projected,
        "bound_simple": report.bound_simple,
        "ordered": report.xi_norm <= report.bound_projected
        <= report.bound_simple + 1e-15,
        "per_line_bounds": [float(v) for v in report.per_line_bounds],
        "per_line_errors": [float(v) for v in
                            np.abs(report.f_rp - report.f_lin)],
    }))
    return EXIT_OK


def cmd_feasibility(args) -> int:
    net = _load_network(args)
    cert = max_flow_feasible(net)
    payload = {"certificate": _certificate_dict(cert)}
    if args.partitions:
        if net.node_count > 20:
            payload["partitions"] = (
                "skipped: exhaustive check capped at 20 nodes")
        else:
            ok, worst, margin = partition_check(net)
            payload["partitions"] = {
                "all_satisfied": bool(ok),
                "worst_partition": list(worst),
                "min_margin": float(margin),
            }
    _emit(args, _json(payload))
    return EXIT_OK if cert.feasible else EXIT_INFEASIBLE


def cmd_experiment(args) -> int:
    net = None
    if args.case or args.network:
        net = _load_network(args)
    pf_values = _parse_pf(args.pf) if args.pf else None
    ring_sizes = ([int(v) for v in args.ring_sizes.split(",")]
                  if args.ring_sizes else None)
    text = run_experiment(args.experiment, net=net, samples=args.samples,
                          seed=args.seed, pf_values=pf_values,
                          ring_sizes=ring_sizes)
    _emit(args, text)
    return EXIT_OK


def _add_io_args(parser, pf=True):
    parser.add_argument("--case", help="MATPOWER .m case file")
    parser.add_argument("--network", help="native network JSON file")
    if pf:
        parser.add_argument("--pf", help="injection scaling factor "
                            "(float, comma list, or start:stop:count)")
    parser.add_argument("--basis", default="fundamental",
                        choices=("fundamental", "minimal"),
                        help="cycle basis construction")
    parser.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syncflow",
        description="Synchronized states of lossless power grids and "
                    "oscillator networks by convex optimization.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute synchronized state(s)")
    _add_io_args(p)
    p.add_argument("--all-states", action="store_true",
                   help="enumerate all normal states over winding vectors")
    p.add_argument("--gauge", default="zero-mean",
                   choices=("zero-mean", "slack"), help="phase gauge")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("enumerate", help="list admissible winding vectors")
    _add_io_args(p)
    p.add_argument("--cap", type=int, default=10 ** 6,
                   help="maximum number of winding candidates")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("approx", help="linear vs corrected vs exact flows")
    _add_io_args(p)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("bounds", help="rigorous error-bound report")
    _add_io_args(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("feasibility", help="max-flow feasibility certificate")
    _add_io_args(p)
    p.add_argument("--partitions", action="store_true",
                   help="add exhaustive bipartition check (N <= 20)")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("experiment", help="run a CSV-emitting experiment")
    p.add_argument("experiment", choices=EXPERIMENTS)
    _add_io_args(p)
    p.add_argument("--seed", type=int, default=0, help="PRNG root seed")
    p.add_argument("--samples", type=int, default=10_000,
                   help="Monte-Carlo sample count")
    p.add_argument("--ring-sizes", help="comma list of ring sizes (fig4)")
    p.set_defaults(func=cmd_experiment)

    return parser


# argparse --basis values are the user-facing names; the library uses the
# construction-specific identifiers.
_BASIS_KINDS = {"fundamental": "fundamental-bfs", "minimal": "minimal"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "basis", None):
        args.basis = _BASIS_KINDS[args.basis]
    try:
        return args.func(args)
    except EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENUM_CAP
    except (CaseFormatError, NetworkError, OSError, ValueError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
