"""MATPOWER case parsing, rebalancing pipeline and native serialization."""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .network import Network

SCHEMA_VERSION = 1


class CaseFormatError(ValueError):
    """Raised for malformed case text or schema violations."""


@dataclass(frozen=True)
class MatpowerCase:
    name: str
    base_mva: float
    buses: tuple[tuple[int, float], ...]        # (bus id, Pd in MW)
    gens: tuple[tuple[int, float], ...]         # (bus id, Pg in MW)
    branches: tuple[tuple[int, int, float], ...]  # (from, to, x), in service

    @property
    def bus_count(self) -> int:
        return len(self.buses)


_BLOCK_RE = re.compile(r"mpc\.(\w+)\s*=\s*(\[|[^;\[]+;)")


def _strip_comments(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        lines.append(raw.split("%", 1)[0])
    return lines


def parse_matpower(text: str) -> MatpowerCase:
    """Parse the subset of a MATPOWER .m case used here.

    Reads baseMVA, the bus table (id, Pd), the gen table (bus, Pg) and the
    branch table (from, to, x, status); out-of-service branches are
    dropped.  Comments, blank lines, scientific notation and trailing
    semicolons are tolerated; unknown columns are ignored.
    """
    lines = _strip_comments(text)
    name_match = re.search(r"function\s+mpc\s*=\s*(\w+)", text)
    name = name_match.group(1) if name_match else "case"

    blocks: dict[str, list[tuple[int, list[float]]]] = {}
    scalars: dict[str, float] = {}
    current: str | None = None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if current is None:
            m = re.match(r"mpc\.(\w+)\s*=\s*(.*)", stripped)
            if not m:
                continue
            key, rest = m.group(1), m.group(2).strip()
            if rest.startswith("["):
                current = key
                blocks[key] = []
                rest = rest[1:].strip()
                stripped = rest
            else:
                value = rest.rstrip(";").strip().strip("'\"")
                try:
                    scalars[key] = float(value)
                except ValueError:
                    continue
                continue
        if current is not None:
            body = stripped
            closed = False
            if "]" in body:
                body = body.split("]", 1)[0]
                closed = True
            body = body.strip().rstrip(";").strip()
            if body:
                tokens = body.replace(";", " ").split()
                try:
                    row = [float(t) for t in tokens]
                except ValueError as exc:
                    raise CaseFormatError(
                        f"line {lineno}: malformed row in mpc.{current}: "
                        f"{exc}") from None
                blocks[current].append((lineno, row))
            if closed:
                current = None

    if "baseMVA" not in scalars:
        raise CaseFormatError("missing block: mpc.baseMVA")
    for block in ("bus", "gen", "branch"):
        if block not in blocks:
            raise CaseFormatError(f"missing block: mpc.{block}")

    buses = []
    bus_ids = set()
    for lineno, row in blocks["bus"]:
        if len(row) < 3:
            raise CaseFormatError(f"line {lineno}: bus row too short")
        bus_id = int(row[0])
        buses.append((bus_id, float(row[2])))
        bus_ids.add(bus_id)
    gens = []
    for lineno, row in blocks["gen"]:
        if len(row) < 2:
            raise CaseFormatError(f"line {lineno}: gen row too short")
        bus_id = int(row[0])
        if bus_id not in bus_ids:
            raise CaseFormatError(
                f"line {lineno}: gen references unknown bus {bus_id}")
        gens.append((bus_id, float(row[1])))
    branches = []
    for lineno, row in blocks["branch"]:
        if len(row) < 4:
            raise CaseFormatError(f"line {lineno}: branch row too short")
        fbus, tbus = int(row[0]), int(row[1])
        for b in (fbus, tbus):
            if b not in bus_ids:
                raise CaseFormatError(
                    f"line {lineno}: branch references unknown bus {b}")
        status = int(row[10]) if len(row) > 10 else 1
        if status == 0:
            continue
        branches.append((fbus, tbus, float(row[3])))
    return MatpowerCase(name=name, base_mva=scalars["baseMVA"],
                        buses=tuple(buses), gens=tuple(gens),
                        branches=tuple(branches))


def to_network(case: MatpowerCase, p_f: float = 1.0) -> Network:
    """Rebalanced per-unit network from a parsed case.

    Injections are (sum of Pg at the bus - Pd) / baseMVA; the residual
    imbalance is added to the first generator; everything is then scaled
    by the load factor p_f.  Couplings are the inverse branch reactances.
    """
    index = {bus_id: i for i, (bus_id, _) in enumerate(case.buses)}
    p = np.zeros(len(case.buses))
    for bus_id, pd in case.buses:
        p[index[bus_id]] -= pd
    for bus_id, pg in case.gens:
        p[index[bus_id]] += pg
    p /= case.base_mva
    if not case.gens:
        raise CaseFormatError("case has no generators to rebalance against")
    first_gen_bus = case.gens[0][0]
    p[index[first_gen_bus]] -= p.sum()
    p *= p_f
    tails, heads, couplings = [], [], []
    for fbus, tbus, x in case.branches:
        if x <= 0:
            raise CaseFormatError(
                f"branch ({fbus},{tbus}) has nonpositive reactance")
        tails.append(index[fbus])
        heads.append(index[tbus])
        couplings.append(1.0 / x)
    labels = tuple(str(bus_id) for bus_id, _ in case.buses)
    return Network(tails=np.array(tails), heads=np.array(heads),
                   couplings=np.array(couplings), injections=p,
                   labels=labels)


def network_to_json(net: Network) -> str:
    doc = {
        "schema": SCHEMA_VERSION,
        "nodes": [{"id": i, "label": net.labels[i],
                   "p": float(net.injections[i])}
                  for i in range(net.node_count)],
        "edges": [{"from": int(u), "to": int(v), "K": float(k)}
                  for u, v, k in net.edges()],
    }
    return json.dumps(doc, indent=2)


def network_from_json(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_VERSION:
        raise CaseFormatError(
            f"expected schema {SCHEMA_VERSION} network document")
    try:
        nodes = doc["nodes"]
        edges = doc["edges"]
        ids = [n["id"] for n in nodes]
        if ids != list(range(len(nodes))):
            raise CaseFormatError("node ids must be 0..N-1 in order")
        injections = np.array([float(n["p"]) for n in nodes])
        labels = tuple(str(n.get("label", i)) for i, n in enumerate(nodes))
        tails = np.array([int(e["from"]) for e in edges])
        heads = np.array([int(e["to"]) for e in edges])
        couplings = np.array([float(e["K"]) for e in edges])
    except (KeyError, TypeError) as exc:
        raise CaseFormatError(f"schema violation: {exc}") from None
    return Network(tails=tails, heads=heads, couplings=couplings,
                   injections=injections, labels=labels)


RESULT_COLUMNS = ("edge", "tail", "head", "K", "f_lin", "f_approx", "f_rp",
                  "loading", "bound_per_line")


@dataclass(frozen=True)
class ResultRecord:
    edge: int
    tail: str
    head: str
    coupling: float
    f_lin: float
    f_approx: float
    f_rp: float
    loading: float
    bound_per_line: float
    metadata: dict = field(default_factory=dict)


def fmt(x: float) -> str:
    """Locale-independent float with 17 significant digits."""
    return format(float(x), ".17g")


def write_results_csv(records, metadata: dict | None = None) -> str:
    """RFC-4180-style CSV with '#'-prefixed metadata header comments."""
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        buf.write(f"# {key}={value}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(RESULT_COLUMNS)
    for r in records:
        writer.writerow([r.edge, r.tail, r.head, fmt(r.coupling),
                         fmt(r.f_lin), fmt(r.f_approx), fmt(r.f_rp),
                         fmt(r.loading), fmt(r.bound_per_line)])
    return buf.getvalue()
