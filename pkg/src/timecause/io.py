"""Readers and writers: panel CSV, ground-truth edge lists, DREAM3 files,
and report documents.

All readers reject malformed input rather than repairing it, and carry
file/line positions in their errors. Writers are byte-deterministic for
identical inputs.

Panel CSV grammar::

    traj,time,<name0>,<name1>,...
    0,0,1.5,-2.25
    0,1,0.5,0.125
    1,0,...

``traj`` and ``time`` are non-negative integers, rows sorted by
(traj, time) with time strictly increasing inside a trajectory; values
are decimal floats written with 17 significant digits (lossless). The
first named column is the default target.

Ground-truth grammar: one edge per line, ``k i j`` for a lag-k edge from
covariate i to covariate j, ``Y k j`` for a lag-k edge from covariate j
to the target. Indices are 0-based, lags 1-based.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .discovery import (
    DiscoveryConfig,
    DiscoveryReport,
    EdgeStatistics,
    FoldDiagnostics,
)
from .errors import (
    InconsistentSchema,
    ParseError,
    SchemaVersionMismatch,
    ShapeMismatch,
    UnevenTrajectories,
    UnknownGene,
)
from .panel import Panel
from .regression import RegressorSpec
from .synth import AdjacencyTensor

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Panel CSV


def write_panel_csv(panel: Panel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("traj,time," + ",".join(panel.variable_names) + "\n")
        for r, traj in enumerate(panel.trajectories):
            for t in range(traj.shape[0]):
                values = ",".join(f"{v:.17g}" for v in traj[t])
                fh.write(f"{r},{t},{values}\n")


def _parse_nonneg_int(token, what, path, lineno):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"{what} {token!r} is not an integer", path, lineno) from None
    if value < 0:
        raise ParseError(f"{what} must be non-negative, got {value}", path, lineno)
    return value


def read_panel_csv(path) -> Panel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    header = lines[0].split(",")
    if len(header) < 4 or header[0] != "traj" or header[1] != "time":
        raise ParseError(
            "header must be 'traj,time,<name0>,<name1>,...'", path, 1
        )
    names = tuple(header[2:])
    width = len(names)
    trajectories = []
    current = None
    prev_traj = None
    prev_time = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise ParseError("blank line inside panel CSV", path, lineno)
        fields = line.split(",")
        if len(fields) != width + 2:
            raise InconsistentSchema(
                f"row has {len(fields)} fields, header implies {width + 2}",
                path, lineno,
            )
        traj_id = _parse_nonneg_int(fields[0], "traj", path, lineno)
        time_id = _parse_nonneg_int(fields[1], "time", path, lineno)
        try:
            values = [float(tok) for tok in fields[2:]]
        except ValueError:
            raise ParseError("non-numeric value", path, lineno) from None
        if not all(np.isfinite(values)):
            raise ParseError("non-finite value", path, lineno)
        if prev_traj is None or traj_id != prev_traj:
            if prev_traj is not None and traj_id < prev_traj:
                raise ParseError(
                    f"trajectory ids out of order ({prev_traj} then {traj_id})",
                    path, lineno,
                )
            current = []
            trajectories.append(current)
            prev_traj = traj_id
            prev_time = None
        elif time_id <= prev_time:
            raise ParseError(
                f"time not increasing within trajectory ({prev_time} then {time_id})",
                path, lineno,
            )
        prev_time = time_id
        current.append(values)
    if not trajectories:
        raise ParseError("no data rows", path, len(lines))
    return Panel(
        trajectories=tuple(np.asarray(t) for t in trajectories),
        variable_names=names,
        target_index=0,
    )


# ---------------------------------------------------------------------------
# Ground-truth edge lists


def write_truth(structure: AdjacencyTensor, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k in range(1, structure.delta + 1):
            for i in range(structure.m):
                for j in range(structure.m):
                    if structure.sigma[k - 1, i, j]:
                        fh.write(f"{k} {i} {j}\n")
        for k in range(1, structure.delta + 1):
            for j in range(structure.m):
                if structure.sigma_y[k - 1, j]:
                    fh.write(f"Y {k} {j}\n")


def read_truth(path):
    """Parse a ground-truth file into edge sets.

    Returns
    -------
    (covariate_edges, target_edges)
        ``covariate_edges`` is a set of (k, i, j); ``target_edges`` a set
        of (k, j). Indices 0-based, lags 1-based.
    """
    covariate_edges = set()
    target_edges = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            tokens = stripped.split()
            if tokens[0] == "Y":
                if len(tokens) != 3:
                    raise ParseError("target edge needs 'Y k j'", path, lineno)
                k = _parse_nonneg_int(tokens[1], "lag", path, lineno)
                j = _parse_nonneg_int(tokens[2], "covariate", path, lineno)
                if k < 1:
                    raise ParseError("lag must be >= 1", path, lineno)
                target_edges.add((k, j))
            else:
                if len(tokens) != 3:
                    raise ParseError("covariate edge needs 'k i j'", path, lineno)
                k = _parse_nonneg_int(tokens[0], "lag", path, lineno)
                i = _parse_nonneg_int(tokens[1], "covariate", path, lineno)
                j = _parse_nonneg_int(tokens[2], "covariate", path, lineno)
                if k < 1:
                    raise ParseError("lag must be >= 1", path, lineno)
                covariate_edges.add((k, i, j))
    return covariate_edges, target_edges


def truth_to_structure(covariate_edges, target_edges, delta, m) -> AdjacencyTensor:
    sigma = np.zeros((delta, m, m), dtype=np.uint8)
    sigma_y = np.zeros((delta, m), dtype=np.uint8)
    for k, i, j in covariate_edges:
        if k > delta or i >= m or j >= m:
            raise ShapeMismatch(f"edge ({k},{i},{j}) outside ({delta},{m},{m})")
        sigma[k - 1, i, j] = 1
    for k, j in target_edges:
        if k > delta or j >= m:
            raise ShapeMismatch(f"target edge ({k},{j}) outside ({delta},{m})")
        sigma_y[k - 1, j] = 1
    return AdjacencyTensor(sigma=sigma, sigma_y=sigma_y)


# ---------------------------------------------------------------------------
# DREAM3


@dataclass(frozen=True, eq=False)
class Dream3Bundle:
    """Expression panel plus gold-standard directed edges.

    ``positive_edges`` holds (cause index, effect index) pairs labeled 1;
    pairs absent from the gold file are negatives.
    """

    panel: Panel
    gene_names: tuple
    positive_edges: frozenset


def read_dream3(expression_path, gold_path, traj_len=None) -> Dream3Bundle:
    """Parse a DREAM3-style expression file and its gold standard.

    The expression file is tab-separated, a header of time label plus
    gene names, then concatenated trajectory blocks. Blocks are delimited
    by a time reset (time <= previous) or a blank line; ``traj_len``
    overrides the delimiting with fixed-length chunks.
    """
    with open(expression_path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", expression_path, 1)
    header = lines[0].split("\t")
    if len(header) < 3:
        raise ParseError(
            "header must be a time label plus at least two gene names",
            expression_path, 1,
        )
    genes = tuple(header[1:])
    if len(set(genes)) != len(genes):
        raise ParseError("duplicate gene names in header", expression_path, 1)
    rows = []
    times = []
    breaks = [0]
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            if rows and breaks[-1] != len(rows):
                breaks.append(len(rows))
            continue
        fields = line.split("\t")
        if len(fields) != len(genes) + 1:
            raise InconsistentSchema(
                f"row has {len(fields)} fields, header implies {len(genes) + 1}",
                expression_path, lineno,
            )
        try:
            t = float(fields[0])
            values = [float(tok) for tok in fields[1:]]
        except ValueError:
            raise ParseError("non-numeric value", expression_path, lineno) from None
        if not all(np.isfinite(values)) or not np.isfinite(t):
            raise ParseError("non-finite value", expression_path, lineno)
        if traj_len is None and times and breaks[-1] != len(rows) and t <= times[-1]:
            breaks.append(len(rows))
        rows.append(values)
        times.append(t)
    if not rows:
        raise ParseError("no data rows", expression_path, len(lines))
    if traj_len is not None:
        if traj_len < 2:
            raise ParseError("traj_len must be >= 2", expression_path)
        if len(rows) % traj_len:
            raise UnevenTrajectories(
                f"{len(rows)} rows do not divide into blocks of {traj_len}",
                expression_path,
            )
        breaks = list(range(0, len(rows), traj_len))
    breaks.append(len(rows))
    block_lengths = {b - a for a, b in zip(breaks, breaks[1:])}
    if len(block_lengths) != 1:
        raise UnevenTrajectories(
            f"trajectory blocks have unequal lengths {sorted(block_lengths)}",
            expression_path,
        )
    trajectories = tuple(
        np.asarray(rows[a:b]) for a, b in zip(breaks, breaks[1:])
    )
    panel = Panel(trajectories=trajectories, variable_names=genes, target_index=0)

    gene_index = {g: i for i, g in enumerate(genes)}
    positive = set()
    seen = set()
    with open(gold_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            tokens = stripped.split("\t")
            if len(tokens) != 3 or tokens[2] not in ("0", "1"):
                raise ParseError(
                    "gold line must be '<gene>\\t<gene>\\t<0|1>'", gold_path, lineno
                )
            for g in tokens[:2]:
                if g not in gene_index:
                    raise UnknownGene(
                        f"gene {g!r} not in expression header", gold_path, lineno
                    )
            pair = (gene_index[tokens[0]], gene_index[tokens[1]])
            if pair[0] == pair[1]:
                raise ParseError(
                    f"self-edge on {tokens[0]!r} in gold standard", gold_path, lineno
                )
            if pair in seen:
                raise ParseError(
                    f"duplicate gold pair {tokens[0]!r} -> {tokens[1]!r}",
                    gold_path, lineno,
                )
            seen.add(pair)
            if tokens[2] == "1":
                positive.add(pair)
    return Dream3Bundle(
        panel=panel, gene_names=genes, positive_edges=frozenset(positive)
    )


# ---------------------------------------------------------------------------
# Reports


def _edge_to_dict(edge: EdgeStatistics) -> dict:
    return asdict(edge)


def _report_to_dict(report: DiscoveryReport) -> dict:
    return {
        "target_index": report.target_index,
        "target_name": report.target_name,
        "variable_names": list(report.variable_names),
        "n_rows": report.n_rows,
        "config": asdict(report.config),
        "edges": [_edge_to_dict(e) for e in report.edges],
        "fold_diagnostics": [asdict(d) for d in report.fold_diagnostics],
    }


def _report_from_dict(data: dict) -> DiscoveryReport:
    cfg = dict(data["config"])
    cfg["regressor"] = RegressorSpec(**cfg["regressor"])
    return DiscoveryReport(
        target_index=data["target_index"],
        target_name=data["target_name"],
        variable_names=tuple(data["variable_names"]),
        n_rows=data["n_rows"],
        config=DiscoveryConfig(**cfg),
        edges=tuple(EdgeStatistics(**e) for e in data["edges"]),
        fold_diagnostics=tuple(
            FoldDiagnostics(**d) for d in data["fold_diagnostics"]
        ),
        elapsed_seconds=None,
    )


def write_report(report, path) -> None:
    """Serialize one report (or a list of them) as deterministic JSON.

    Wall-clock timing is not serialized: identical runs must produce
    byte-identical files.
    """
    if isinstance(report, DiscoveryReport):
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "single_target",
            "report": _report_to_dict(report),
        }
    else:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "multi_target",
            "reports": [_report_to_dict(r) for r in report],
        }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_report(path):
    """Read back a report document; returns a report or a list of them."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, path, e.lineno) from None
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"schema version {version!r}, reader supports {SCHEMA_VERSION}", path
        )
    kind = payload.get("kind")
    if kind == "single_target":
        return _report_from_dict(payload["report"])
    if kind == "multi_target":
        return [_report_from_dict(r) for r in payload["reports"]]
    raise ParseError(f"unknown report kind {kind!r}", path)
