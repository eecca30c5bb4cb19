"""File formats: graph JSON, samples CSV, policy JSON, statistics JSON, report CSV.

Budget-unit numbers (``delta_t``, ``delta_inf``, ``delta_sup``, statistic
bounds) may be written as decimal strings so grid values like "0.1" stay
exact through a round trip; plain JSON numbers are accepted everywhere.
``ParseError`` covers structural problems only; a well-formed file that
describes an invalid model raises the same errors as the constructors do.
"""

from __future__ import annotations

import csv
import json
import math
from decimal import Decimal, InvalidOperation

import numpy as np

from ._sweep import PolicyTable
from .ambiguity import (
    AffinePiece,
    AmbiguitySet,
    PiecewiseAffineStatistic,
    StatisticBound,
)
from .errors import ConfigurationError, ParseError
from .model import Arc, Graph, GridDistribution


def _decimal(value, what: str) -> float:
    if value is None or isinstance(value, bool):
        raise ParseError(f"{what}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(Decimal(str(value)))
    except (InvalidOperation, ValueError):
        raise ParseError(f"{what}: cannot parse {value!r} as a decimal number") from None


def _dec_str(x: float) -> str:
    return repr(float(x))


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None


def _require(obj: dict, key: str, where: str):
    try:
        return obj[key]
    except KeyError:
        raise ParseError(f"{where}: missing key {key!r}") from None


def _merge_delta_t(file_dt, delta_t, where: str):
    if delta_t is None:
        return file_dt
    if file_dt is not None and abs(file_dt - delta_t) > 1e-12 * max(1.0, abs(delta_t)):
        raise ConfigurationError(
            f"{where}: file delta_t {file_dt!r} disagrees with requested {delta_t!r}"
        )
    return delta_t


def _parse_pmf(obj, delta_t: float, where: str) -> GridDistribution:
    if not isinstance(obj, list) or not obj:
        raise ParseError(f"{where}: pmf must be a nonempty list")
    cells = {}
    for j, cell in enumerate(obj):
        if not isinstance(cell, dict):
            raise ParseError(f"{where}: pmf[{j}] must be an object")
        k = _require(cell, "offset_k", f"{where}: pmf[{j}]")
        w = _require(cell, "weight", f"{where}: pmf[{j}]")
        if isinstance(k, bool) or not isinstance(k, int):
            raise ParseError(f"{where}: pmf[{j}].offset_k must be an integer")
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise ParseError(f"{where}: pmf[{j}].weight must be a number")
        if k in cells:
            raise ParseError(f"{where}: duplicate pmf offset {k}")
        cells[k] = float(w)
    lo, hi = min(cells), max(cells)
    return GridDistribution(delta_t, lo, [cells.get(k, 0.0) for k in range(lo, hi + 1)])


def load_graph(path, delta_t: float | None = None):
    """Read a graph JSON file.

    Returns ``(graph, distributions, delta_t)`` where ``distributions`` has an
    entry for every arc that carries a ``pmf``.  The resolved ``delta_t`` is
    the argument, the file's own value, or None when neither is given; giving
    both checks they agree.  Arc bounds default to the pmf support.
    """
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    nodes = _require(data, "nodes", str(path))
    source = _require(data, "source", str(path))
    destination = _require(data, "destination", str(path))
    arcs_raw = _require(data, "arcs", str(path))
    if not isinstance(nodes, list) or not isinstance(arcs_raw, list):
        raise ParseError(f"{path}: 'nodes' and 'arcs' must be lists")
    file_dt = _decimal(data["delta_t"], f"{path}: delta_t") if data.get("delta_t") is not None else None
    delta_t = _merge_delta_t(file_dt, delta_t, str(path))

    arcs = []
    dists = {}
    for i, entry in enumerate(arcs_raw):
        where = f"{path}: arcs[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where} must be an object")
        tail = _require(entry, "tail", where)
        head = _require(entry, "head", where)
        dist = None
        if entry.get("pmf") is not None:
            if delta_t is None:
                raise ParseError(f"{where}: pmf given but no delta_t is available")
            dist = _parse_pmf(entry["pmf"], delta_t, where)
        if entry.get("delta_inf") is not None:
            lo = _decimal(entry["delta_inf"], f"{where}: delta_inf")
        elif dist is not None:
            lo = dist.support_lo
        else:
            raise ParseError(f"{where}: needs delta_inf (no pmf to infer it from)")
        if entry.get("delta_sup") is not None:
            hi = _decimal(entry["delta_sup"], f"{where}: delta_sup")
        elif dist is not None:
            hi = dist.support_hi
        else:
            raise ParseError(f"{where}: needs delta_sup (no pmf to infer it from)")
        arcs.append(Arc(tail, head, lo, hi))
        if dist is not None:
            dists[(tail, head)] = dist
    return Graph(nodes, arcs, source, destination), dists, delta_t


def save_graph(graph: Graph, distributions, delta_t: float | None, path) -> None:
    """Write a graph (and any known arc pmfs) as a graph JSON file."""
    arcs = []
    for arc in graph.arcs:
        entry = {
            "tail": arc.tail,
            "head": arc.head,
            "delta_inf": _dec_str(arc.delta_inf),
            "delta_sup": _dec_str(arc.delta_sup),
        }
        dist = (distributions or {}).get(arc.key)
        if dist is not None:
            entry["pmf"] = [
                {"offset_k": int(dist.offset_k + m), "weight": float(w)}
                for m, w in enumerate(dist.weights)
                if w > 0.0
            ]
        arcs.append(entry)
    data = {
        "nodes": list(graph.nodes),
        "source": graph.source,
        "destination": graph.destination,
        "arcs": arcs,
    }
    if delta_t is not None:
        data["delta_t"] = _dec_str(delta_t)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


_SAMPLES_HEADER = ["arc_tail", "arc_head", "cost"]


def load_samples(path):
    """Read an arc-cost samples CSV into ``{(tail, head): float array}``."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from None
    out: dict[tuple, list] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != _SAMPLES_HEADER:
            raise ParseError(f"{path}: expected header {','.join(_SAMPLES_HEADER)}")
        for ln, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{ln}: expected 3 fields, got {len(row)}")
            tail, head, cost_s = (f.strip() for f in row)
            try:
                cost = float(cost_s)
            except ValueError:
                raise ParseError(f"{path}:{ln}: bad cost {cost_s!r}") from None
            if not math.isfinite(cost) or cost <= 0.0:
                raise ParseError(f"{path}:{ln}: cost must be positive and finite")
            out.setdefault((tail, head), []).append(cost)
    if not out:
        raise ParseError(f"{path}: no sample rows")
    return {key: np.asarray(vals, dtype=float) for key, vals in out.items()}


def save_samples(samples, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_SAMPLES_HEADER)
        for (tail, head), vals in samples.items():
            for c in np.asarray(vals, dtype=float):
                w.writerow([tail, head, repr(float(c))])


def bin_samples(values, delta_t: float) -> GridDistribution:
    """Bin cost samples to the grid, rounding half up and never below one step."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise ConfigurationError("need a nonempty 1-d sample array")
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
        raise ConfigurationError("samples must be positive finite costs")
    ks = np.maximum(np.floor(vals / delta_t + 0.5).astype(int), 1)
    lo, hi = int(ks.min()), int(ks.max())
    counts = np.bincount(ks - lo, minlength=hi - lo + 1)
    return GridDistribution(delta_t, lo, counts / float(vals.size))


def save_policy(policy: PolicyTable, path, values=None) -> None:
    """Write a policy JSON file; ``values`` optionally adds per-row values."""
    nodes = {}
    for node, acts in policy.actions.items():
        if any(a is None for a in acts):
            raise ConfigurationError(f"policy for node {node!r} has unfilled rows")
        rec = {"k_min": int(policy.k_min[node]), "actions": [str(a) for a in acts]}
        if values is not None and node in values:
            rec["values"] = [float(v) for v in values[node]]
        nodes[str(node)] = rec
    data = {"delta_t": _dec_str(policy.delta_t), "k_T": int(policy.k_T), "nodes": nodes}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def load_policy(path, delta_t: float | None = None):
    """Read a policy JSON file; returns ``(policy, values_or_None)``."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    dt = _decimal(_require(data, "delta_t", str(path)), f"{path}: delta_t")
    _merge_delta_t(dt, delta_t, str(path))
    k_T = _require(data, "k_T", str(path))
    if isinstance(k_T, bool) or not isinstance(k_T, int):
        raise ParseError(f"{path}: k_T must be an integer")
    nodes_obj = _require(data, "nodes", str(path))
    if not isinstance(nodes_obj, dict):
        raise ParseError(f"{path}: 'nodes' must be an object")
    k_min, actions, values = {}, {}, {}
    for node, rec in nodes_obj.items():
        where = f"{path}: nodes[{node!r}]"
        if not isinstance(rec, dict):
            raise ParseError(f"{where} must be an object")
        base = _require(rec, "k_min", where)
        acts = _require(rec, "actions", where)
        if isinstance(base, bool) or not isinstance(base, int):
            raise ParseError(f"{where}: k_min must be an integer")
        if not isinstance(acts, list) or len(acts) != k_T - base + 1:
            raise ParseError(
                f"{where}: actions must list one head per row of [{base}, {k_T}]"
            )
        if any(not isinstance(a, str) for a in acts):
            raise ParseError(f"{where}: every action must be a node id string")
        k_min[node] = base
        actions[node] = list(acts)
        if rec.get("values") is not None:
            vals = rec["values"]
            if not isinstance(vals, list) or len(vals) != len(acts):
                raise ParseError(f"{where}: values must match the action rows")
            values[node] = [_decimal(v, f"{where}: values") for v in vals]
    return PolicyTable(dt, k_T, k_min, actions), (values if values else None)


def load_statistics(path, delta_t: float):
    """Read a statistics JSON file into ``{(tail, head): AmbiguitySet}``.

    Arc keys look like ``"tail->head"``.  Each statistic gives its affine
    ``pieces`` (inclusive grid ranges) and optional ``alpha``/``beta`` bounds;
    a missing bound is unbounded on that side.
    """
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    arcs_obj = _require(data, "arcs", str(path))
    if not isinstance(arcs_obj, dict) or not arcs_obj:
        raise ParseError(f"{path}: 'arcs' must be a nonempty object")
    out = {}
    for key, spec in arcs_obj.items():
        tail, sep, head = key.partition("->")
        if not sep or not tail or not head:
            raise ParseError(f"{path}: arc key {key!r} must look like 'tail->head'")
        where = f"{path}: arcs[{key!r}]"
        if not isinstance(spec, dict):
            raise ParseError(f"{where} must be an object")
        stats_raw = _require(spec, "statistics", where)
        if not isinstance(stats_raw, list) or not stats_raw:
            raise ParseError(f"{where}: 'statistics' must be a nonempty list")
        stats = []
        for si, st in enumerate(stats_raw):
            swhere = f"{where}: statistics[{si}]"
            if not isinstance(st, dict):
                raise ParseError(f"{swhere} must be an object")
            pieces_raw = _require(st, "pieces", swhere)
            if not isinstance(pieces_raw, list) or not pieces_raw:
                raise ParseError(f"{swhere}: 'pieces' must be a nonempty list")
            pieces = []
            for pi, p in enumerate(pieces_raw):
                pwhere = f"{swhere}: pieces[{pi}]"
                if not isinstance(p, dict):
                    raise ParseError(f"{pwhere} must be an object")
                sk = _require(p, "start_k", pwhere)
                ek = _require(p, "end_k", pwhere)
                if any(isinstance(v, bool) or not isinstance(v, int) for v in (sk, ek)):
                    raise ParseError(f"{pwhere}: start_k/end_k must be integers")
                pieces.append(
                    AffinePiece(
                        sk,
                        ek,
                        _decimal(p.get("a", 0.0), f"{pwhere}: a"),
                        _decimal(p.get("b", 0.0), f"{pwhere}: b"),
                    )
                )
            alpha = (
                _decimal(st["alpha"], f"{swhere}: alpha")
                if st.get("alpha") is not None
                else -math.inf
            )
            beta = (
                _decimal(st["beta"], f"{swhere}: beta")
                if st.get("beta") is not None
                else math.inf
            )
            stats.append(
                PiecewiseAffineStatistic(
                    st.get("name", f"stat{si}"), tuple(pieces), StatisticBound(alpha, beta)
                )
            )
        out[(tail, head)] = AmbiguitySet(delta_t, tuple(stats))
    return out


_REPORT_HEADER = ["method", "lambda", "budget", "mean_p", "worst5_p", "runtime_ms"]


def write_report(report, path, *, omit_runtime: bool = False) -> None:
    """Write experiment rows as CSV; ``omit_runtime`` blanks the timing column."""

    def emit(fh):
        w = csv.writer(fh)
        w.writerow(_REPORT_HEADER)
        for row in report.rows:
            w.writerow(
                [
                    row.method,
                    repr(float(row.lam)),
                    repr(float(row.budget)),
                    repr(float(row.mean_p)),
                    repr(float(row.worst5_p)),
                    ""
                    if omit_runtime or row.runtime_ms is None
                    else format(row.runtime_ms, ".3f"),
                ]
            )

    if hasattr(path, "write"):
        emit(path)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
