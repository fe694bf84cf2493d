"""Instance parsers (TNTP networks, a TSPLIB subset) and result files
(per-round CSV ledgers, JSON summaries, plot data)."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ErrorRecord, RunLedger
from .experiments import SummaryTable
from .oracles import Graph, PctspInstance
from .oracles.pctsp import edge_list

LEDGER_COLUMNS = ("round", "objective_error", "solution_error", "total_error",
                  "avg_objective_error", "avg_solution_error", "avg_total_error", "mismatch")


class ParseError(ValueError):
    pass


# -- TNTP ----------------------------------------------------------------------

@dataclass
class TntpNetwork:
    """Arcs use the file's 1-based node ids."""

    node_count: int
    init_node: np.ndarray
    term_node: np.ndarray
    free_flow: np.ndarray
    first_thru_node: int = 1

    @property
    def arc_count(self) -> int:
        return len(self.init_node)

    def graph(self) -> Graph:
        """0-based graph (node ``k`` of the file becomes ``k - 1``)."""
        return Graph(self.node_count, self.init_node - 1, self.term_node - 1)


def _metadata(line):
    # "<NUMBER OF NODES> 933"
    close = line.index(">")
    return line[1:close].strip().upper(), line[close + 1:].strip()


def parse_tntp(text: str, zone_threshold: int = 0) -> TntpNetwork:
    """Parse a TNTP ``*_net.tntp`` file.

    Columns are ``init term capacity length free_flow_time ...``; ``~``
    starts a comment and a trailing ``;`` is ignored.  Arcs touching a
    node with id ``<= zone_threshold`` are dropped afterwards (zone nodes
    only feed traffic in and out).
    """
    meta = {}
    rows = []
    in_body = "<END OF METADATA>" not in text.upper()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("~", 1)[0].strip()
        if not line:
            continue
        if line.startswith("<"):
            key, value = _metadata(line)
            if key == "END OF METADATA":
                in_body = True
            else:
                meta[key] = value
            continue
        if not in_body:
            raise ParseError(f"line {lineno}: data before <END OF METADATA>")
        fields = line.rstrip(";").split()
        if len(fields) < 5:
            raise ParseError(f"line {lineno}: expected at least 5 columns, got {len(fields)}")
        try:
            init, term = int(fields[0]), int(fields[1])
            fft = float(fields[4])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if not (math.isfinite(fft) and fft >= 0):
            raise ParseError(f"line {lineno}: free-flow time {fields[4]} must be >= 0")
        rows.append((lineno, init, term, fft))
    try:
        node_count = int(meta["NUMBER OF NODES"])
        link_count = int(meta["NUMBER OF LINKS"])
    except KeyError as exc:
        raise ParseError(f"missing metadata {exc}") from None
    except ValueError as exc:
        raise ParseError(f"bad metadata: {exc}") from None
    if link_count != len(rows):
        raise ParseError(f"header declares {link_count} links but the body has {len(rows)}")
    for lineno, init, term, _ in rows:
        if not (1 <= init <= node_count and 1 <= term <= node_count):
            raise ParseError(f"line {lineno}: node id outside 1..{node_count}")
    keep = [r for r in rows if r[1] > zone_threshold and r[2] > zone_threshold]
    arr = np.array([r[1:] for r in keep], dtype=float).reshape(-1, 3)
    return TntpNetwork(node_count, arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2],
                       int(meta.get("FIRST THRU NODE", 1)))


# -- TSPLIB subset -------------------------------------------------------------

@dataclass
class TsplibLiteInstance:
    """Coordinates, prizes and depot; ids are 1-based as in the file."""

    dimension: int
    coords: np.ndarray
    prizes: np.ndarray
    depot: int
    name: str = ""

    def cost(self, i: int, j: int) -> int:
        """EUC_2D distance rounded to the nearest integer."""
        d = self.coords[i - 1] - self.coords[j - 1]
        return int(math.floor(math.hypot(d[0], d[1]) + 0.5))

    def node_order(self) -> list:
        """Depot first, then the other ids ascending."""
        return [self.depot] + [v for v in range(1, self.dimension + 1) if v != self.depot]

    def to_pctsp(self, revenue_scale: float = 1.0) -> PctspInstance:
        order = self.node_order()
        costs = [self.cost(order[i], order[j]) for i, j in edge_list(self.dimension)]
        revs = [revenue_scale * self.prizes[v - 1] for v in order[1:]]
        return PctspInstance(self.dimension, costs, revs)


_SECTIONS = ("NODE_COORD_SECTION", "NODE_SCORE_SECTION", "PRIZE_SECTION", "DEPOT_SECTION")


def parse_tsplib_lite(text: str) -> TsplibLiteInstance:
    """Parse the keywords needed for a profitable tour instance.

    Supported: ``NAME``, ``DIMENSION``, ``EDGE_WEIGHT_TYPE: EUC_2D``,
    ``NODE_COORD_SECTION``, a prize section (``NODE_SCORE_SECTION`` or
    ``PRIZE_SECTION``) and an optional ``DEPOT_SECTION`` ended by ``-1``.
    Without a depot section node 1 is the depot.
    """
    header = {}
    sections = {s: [] for s in _SECTIONS}
    seen = set()
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line == "EOF":
            continue
        word = line.split(":")[0].strip().upper()
        if word in _SECTIONS:
            current = word
            seen.add(word)
            continue
        if ":" in line and not line[0].isdigit() and not line[0] == "-":
            key, value = line.split(":", 1)
            header[key.strip().upper()] = value.strip()
            current = None
            continue
        if current is None:
            raise ParseError(f"line {lineno}: unexpected data outside a section")
        sections[current].append((lineno, line.split()))
    ewt = header.get("EDGE_WEIGHT_TYPE", "").upper()
    if ewt != "EUC_2D":
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {ewt or '(missing)'}; only EUC_2D")
    try:
        dim = int(header["DIMENSION"])
    except (KeyError, ValueError):
        raise ParseError("missing or invalid DIMENSION") from None
    coords = np.full((dim, 2), np.nan)
    for lineno, f in sections["NODE_COORD_SECTION"]:
        if len(f) != 3:
            raise ParseError(f"line {lineno}: coordinate rows are 'id x y'")
        i = _node_id(f[0], dim, lineno)
        coords[i - 1] = float(f[1]), float(f[2])
    if len(sections["NODE_COORD_SECTION"]) != dim or np.isnan(coords).any():
        raise ParseError(f"DIMENSION is {dim} but {len(sections['NODE_COORD_SECTION'])} "
                         "distinct coordinates were given")
    prize_rows = sections["NODE_SCORE_SECTION"] + sections["PRIZE_SECTION"]
    if not prize_rows:
        raise ParseError("missing prize section (NODE_SCORE_SECTION or PRIZE_SECTION)")
    prizes = np.zeros(dim)
    for lineno, f in prize_rows:
        if len(f) != 2:
            raise ParseError(f"line {lineno}: prize rows are 'id prize'")
        prizes[_node_id(f[0], dim, lineno) - 1] = float(f[1])
    depots = []
    for lineno, f in sections["DEPOT_SECTION"]:
        for tok in f:
            if tok == "-1":
                break
            depots.append(_node_id(tok, dim, lineno))
    if "DEPOT_SECTION" in seen and len(depots) != 1:
        raise ParseError(f"exactly one depot required, got {depots}")
    depot = depots[0] if depots else 1
    return TsplibLiteInstance(dim, coords, prizes, depot, header.get("NAME", ""))


def _node_id(tok, dim, lineno):
    try:
        i = int(tok)
    except ValueError:
        raise ParseError(f"line {lineno}: bad node id {tok!r}") from None
    if not 1 <= i <= dim:
        raise ParseError(f"line {lineno}: node id {i} outside 1..{dim}")
    return i


# -- result files --------------------------------------------------------------

def _num(v) -> str:
    return repr(float(v))


def _open_for_write(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_ledger_csv(ledger: RunLedger, path) -> None:
    cols = [ledger.avg_objective, ledger.avg_solution, ledger.avg_total]
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for k, r in enumerate(ledger.records):
            w.writerow([r.round, _num(r.objective_error), _num(r.solution_error),
                        _num(r.total_error), _num(cols[0][k]), _num(cols[1][k]),
                        _num(cols[2][k]), int(r.mismatch)])


def load_ledger_csv(path) -> RunLedger:
    """Rebuild the error records of a ledger file (objectives are not stored)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != LEDGER_COLUMNS:
            raise ParseError(f"{path}: unexpected header {header}")
        ledger = RunLedger()
        for lineno, row in enumerate(reader, start=2):
            try:
                ledger.records.append(ErrorRecord(int(row[0]), float(row[1]), float(row[2]),
                                                  float(row[3]), bool(int(row[7]))))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return ledger


def emit_summary_json(table: SummaryTable, path, config: Optional[dict] = None,
                      seed: Optional[int] = None) -> None:
    doc = {"summary": table.to_dict(), "config": config, "seed": seed}
    with _open_for_write(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_summary_json(path) -> SummaryTable:
    with open(path) as fh:
        doc = json.load(fh)
    return SummaryTable.from_dict(doc["summary"])


def emit_plot_csv(ledger: RunLedger, path, bound: Callable[[int], float]) -> None:
    """Rows ``(t, avg_total, bound(t))`` for convergence plots."""
    avg = ledger.avg_total
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "avg_total", "bound"))
        for t in range(1, len(avg) + 1):
            w.writerow((t, _num(avg[t - 1]), _num(bound(t))))


def emit_plot_svg(ledger: RunLedger, path, bound: Optional[Callable[[int], float]] = None,
                  width: int = 640, height: int = 400) -> None:
    """Log-log line chart of the running average (and the bound, dashed)."""
    avg = ledger.avg_total
    t = np.arange(1, len(avg) + 1)
    series = [(avg, "#1f77b4", "")]
    if bound is not None:
        series.append((np.array([bound(k) for k in t]), "#d62728", ' stroke-dasharray="6 4"'))
    vals = np.concatenate([s[0][s[0] > 0] for s in series])
    if vals.size == 0:
        raise ValueError("nothing positive to plot on a log scale")
    lo, hi = np.log10(vals.min()), np.log10(vals.max())
    hi = hi if hi > lo else lo + 1
    tmax = np.log10(max(len(avg), 2))
    pad = 40

    def xy(k, v):
        x = pad + (width - 2 * pad) * np.log10(k) / tmax
        y = height - pad - (height - 2 * pad) * (np.log10(v) - lo) / (hi - lo)
        return f"{x:.1f},{y:.1f}"

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for values, color, dash in series:
        pts = " ".join(xy(k, v) for k, v in zip(t, values) if v > 0)
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                     f'points="{pts}"/>')
    lines.append("</svg>")
    with _open_for_write(path) as fh:
        fh.write("\n".join(lines) + "\n")


def ensure_dir(path) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {path}: {exc.strerror or exc}") from exc
