"""CSV / plain-text writers for traces, plus the run manifest."""
from __future__ import annotations

import csv
import json
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .engine import AggregateReport, EpisodeTrace
from .metrics import shortest_path
from .network import NodeKind, build_graph

METRICS_HEADER = ["episode", "step", "goodput_mbps", "phi", "connectivity_ratio", "mean_power_dbm"]


class OutputError(OSError):
    pass


def fmt(x: float) -> str:
    """Six significant digits; infinities render as ``inf`` / ``-inf``."""
    return format(float(x), ".6g")


@contextmanager
def _open_out(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            yield fh
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_metrics_csv(traces: Iterable[EpisodeTrace], path) -> None:
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for ep, trace in enumerate(traces):
            for step, m in enumerate(trace.metrics, 1):
                w.writerow([ep, step, fmt(m.goodput), fmt(m.phi),
                            fmt(m.connectivity_ratio), fmt(m.mean_power_dbm)])


def read_metrics_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: (int(v) if k in ("episode", "step") else float(v)) for k, v in row.items()})
    return rows


def write_curves_csv(report: AggregateReport, path) -> None:
    """Per-step means across episodes (one row per step)."""
    names = ["goodput", "phi", "connectivity_ratio"]
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "goodput_mbps", "phi", "connectivity_ratio"])
        for i in range(len(report.per_step["goodput"])):
            w.writerow([i + 1, *(fmt(report.per_step[n][i]) for n in names)])


def write_radius_heatmap_csv(trace: EpisodeTrace, path) -> None:
    """Relay x step matrix of the radius in effect at the start of each step.

    No header or index column, so the file loads directly as a matrix. The
    first column is therefore all zeros.
    """
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in trace.start_radii.T:
            w.writerow([fmt(v) for v in row])


def write_snapshot(trace: EpisodeTrace, step: int, path) -> None:
    """Plain-text topology at ``step``.

    Sections are introduced by ``# nodes``, ``# edges`` and ``# paths``.
    Node lines are ``id,kind,x,y,radius``, edge lines ``src,dst`` and path
    lines ``path,source,terminal,src,dst`` (one per hop of each reachable
    flow's shortest path).
    """
    if not 1 <= step <= trace.horizon:
        raise IndexError(f"step {step} outside 1..{trace.horizon}")
    net = trace.network_at(step)
    topo = build_graph(net, step)
    with _open_out(path) as fh:
        fh.write(f"# step {step}\n# nodes\n")
        for i in range(net.n_nodes):
            n = net.node(i)
            fh.write(f"{n.id},{n.kind.label},{fmt(n.x)},{fmt(n.y)},{fmt(n.radius)}\n")
        fh.write("# edges\n")
        for s, d in topo.edges():
            fh.write(f"{s},{d}\n")
        fh.write("# paths\n")
        for h, t in net.flows:
            path_nodes = shortest_path(topo, h, t)
            if path_nodes is None:
                continue
            for s, d in zip(path_nodes, path_nodes[1:]):
                fh.write(f"path,{h},{t},{s},{d}\n")


def read_snapshot(path) -> dict:
    section = None
    out = {"nodes": [], "edges": [], "paths": []}
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            section = line[1:].strip() if line[1:].strip() in out else section
            continue
        parts = line.split(",")
        if section == "nodes":
            out["nodes"].append((int(parts[0]), NodeKind[parts[1].upper()],
                                 float(parts[2]), float(parts[3]), float(parts[4])))
        elif section == "edges":
            out["edges"].append((int(parts[0]), int(parts[1])))
        elif section == "paths":
            out["paths"].append(tuple(int(p) for p in parts[1:]))
    return out


def _json_default(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(type(obj))


def write_manifest(cfg: ExperimentConfig, command: str, artifacts: dict[str, str], path) -> None:
    doc = {
        "tool": "relaynet",
        "version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "artifacts": artifacts,
    }
    with _open_out(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def write_summary(report: AggregateReport, path) -> None:
    doc = {k: ((float(fmt(v)) if math.isfinite(v) else fmt(v)) if isinstance(v, float) else v)
           for k, v in report.as_dict().items()}
    with _open_out(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
