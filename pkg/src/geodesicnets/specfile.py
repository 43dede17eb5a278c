"""Net-spec documents and result files.

A net-spec is a JSON document with four sections: graph, metric, net and
options.  Unknown keys are rejected so that typos fail loudly.  Result
files are deterministic apart from their timestamp field: keys are sorted
and numbers serialized with round-trip precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .cases import CASE_NAMES, make_case
from .geometry import (
    EuclideanChart,
    FlatTorusChart,
    MetricChart,
    RadialBumpField,
    StereographicSphereChart,
    SumField,
    conformal_family,
)
from .multigraph import WeightedMultigraph, validate
from .net import GeodesicNet, edge_lengths

__all__ = ["NetSpec", "SpecError", "load_spec", "parse_spec", "spec_from_case",
           "write_spec", "results_document", "write_results", "export_plot_csv",
           "read_plot_csv"]

TOOL_VERSION = "0.1.0"


class SpecError(ValueError):
    """The spec document is malformed."""


def _reject_unknown(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise SpecError(f"unknown key(s) {sorted(unknown)} in {where}")


@dataclass
class NetSpec:
    graph: WeightedMultigraph
    base_chart: MetricChart
    bump_field: SumField | None
    amplitude_schedule: list[float] | None
    net: GeodesicNet
    options: dict = field(default_factory=dict)

    def chart(self, amplitude: float | None = None) -> MetricChart:
        if self.bump_field is None:
            return self.base_chart
        x = 1.0 if amplitude is None else amplitude
        if x == 0.0:
            return self.base_chart
        return conformal_family(self.base_chart, self.bump_field, x)


def _parse_graph(doc: dict) -> WeightedMultigraph:
    _reject_unknown(doc, {"vertices", "edges"}, "graph")
    edges = []
    for e in doc.get("edges", []):
        _reject_unknown(e, {"id", "v0", "v1", "multiplicity"}, f"graph.edges[{e.get('id')}]")
        edges.append((e["id"], e["v0"], e["v1"], int(e.get("multiplicity", 1))))
    return WeightedMultigraph.build(doc.get("vertices", []), edges)


def _parse_metric(doc: dict):
    _reject_unknown(
        doc, {"kind", "lattice", "radius", "dim", "box", "bumps", "amplitude_schedule"}, "metric"
    )
    kind = doc.get("kind")
    if kind == "flat-torus":
        base = FlatTorusChart(np.asarray(doc["lattice"], dtype=float))
    elif kind == "stereographic-sphere":
        base = StereographicSphereChart(radius=float(doc.get("radius", 1.0)),
                                        dim=int(doc.get("dim", 2)))
    elif kind == "euclidean":
        box = doc.get("box")
        base = EuclideanChart(dim=int(doc.get("dim", 2)), box=box)
    else:
        raise SpecError(f"unknown metric kind {kind!r}")
    bumps = None
    if doc.get("bumps"):
        fields = []
        for b in doc["bumps"]:
            _reject_unknown(b, {"center", "radius", "amplitude"}, "metric.bumps[]")
            fields.append(
                RadialBumpField(
                    np.asarray(b["center"], dtype=float),
                    float(b["radius"]),
                    float(b["amplitude"]),
                    chart=base,
                )
            )
        bumps = SumField(fields)
    schedule = doc.get("amplitude_schedule")
    if schedule is not None:
        schedule = [float(x) for x in schedule]
    return base, bumps, schedule


def _meridian_samples(longitude_deg: float, n: int) -> np.ndarray:
    from .cases import _stereographic

    lon = np.deg2rad(longitude_deg)
    theta = np.pi * np.linspace(0.0, 1.0, n + 1)
    y = np.stack(
        [np.sin(theta) * np.cos(lon), np.sin(theta) * np.sin(lon), np.cos(theta)], axis=1
    )
    return _stereographic(y)


def _parse_net(doc: dict, graph: WeightedMultigraph, chart: MetricChart, n_samples: int) -> GeodesicNet:
    _reject_unknown(doc, {"vertices", "edges", "periodic_edges"}, "net")
    vertices = {v: np.asarray(p, dtype=float) for v, p in doc.get("vertices", {}).items()}
    samples = {}
    for eid, spec in doc.get("edges", {}).items():
        allowed = {"samples", "generator", "to", "center", "radius", "angles", "longitude"}
        _reject_unknown(spec, allowed, f"net.edges[{eid}]")
        if "samples" in spec:
            samples[eid] = np.asarray(spec["samples"], dtype=float)
            continue
        gen = spec.get("generator")
        t = np.linspace(0.0, 1.0, n_samples + 1)
        e = graph.edge(eid)
        if gen == "straight":
            p0 = vertices[e.v0]
            p1 = np.asarray(spec["to"], dtype=float) if "to" in spec else vertices[e.v1]
            samples[eid] = (1 - t)[:, None] * p0 + t[:, None] * p1
        elif gen == "circle-arc":
            center = np.asarray(spec["center"], dtype=float)
            radius = float(spec["radius"])
            a0, a1 = (float(a) for a in spec["angles"])
            ang = (1 - t) * a0 + t * a1
            samples[eid] = center + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        elif gen == "meridian":
            samples[eid] = _meridian_samples(float(spec["longitude"]), n_samples)
        else:
            raise SpecError(f"edge {eid!r} needs samples or a known generator")
    net = GeodesicNet(
        graph=graph,
        edge_samples=samples,
        vertex_positions=vertices,
        periodic_edges=frozenset(doc.get("periodic_edges", [])),
    )
    net.lengths = edge_lengths(chart, net)
    return net


def parse_spec(doc: dict) -> NetSpec:
    _reject_unknown(doc, {"graph", "metric", "net", "options"}, "document root")
    options = dict(doc.get("options", {}))
    _reject_unknown(
        options, {"n_samples", "tol", "svd_tol", "residual_tol", "seed"}, "options"
    )
    graph = _parse_graph(doc.get("graph", {}))
    problems = validate(graph)
    if problems:
        raise SpecError("invalid graph: " + "; ".join(problems))
    base, bumps, schedule = _parse_metric(doc.get("metric", {}))
    n_samples = int(options.get("n_samples", 64))
    chart = base if bumps is None else conformal_family(base, bumps, 1.0)
    net = _parse_net(doc.get("net", {}), graph, chart, n_samples)
    from .net import check_net

    problems = check_net(chart, net, tol=1e-7)
    if problems:
        raise SpecError("invalid net: " + "; ".join(problems))
    return NetSpec(
        graph=graph,
        base_chart=base,
        bump_field=bumps,
        amplitude_schedule=schedule,
        net=net,
        options=options,
    )


def load_spec(path: str) -> NetSpec:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return parse_spec(doc)


def spec_from_case(name: str, n_samples: int = 64) -> dict:
    """Net-spec document for one of the built-in cases."""
    if name not in CASE_NAMES:
        raise SpecError(f"unknown case {name!r}; choose from {CASE_NAMES}")
    case = make_case(name, n_samples=n_samples)
    net = case.net
    doc = {
        "graph": {
            "vertices": list(net.graph.vertices),
            "edges": [
                {"id": e.id, "v0": e.v0, "v1": e.v1, "multiplicity": e.multiplicity}
                for e in net.graph.edges
            ],
        },
        "metric": _metric_doc(case.chart),
        "net": {
            "vertices": {v: [float(x) for x in p] for v, p in net.vertex_positions.items()},
            "edges": {
                e.id: {"samples": [[float(x) for x in p] for p in net.edge_samples[e.id]]}
                for e in net.graph.edges
            },
        },
        "options": {"n_samples": n_samples, "tol": 1e-8, "svd_tol": 1e-6},
    }
    if net.periodic_edges:
        doc["net"]["periodic_edges"] = sorted(net.periodic_edges)
    return doc


def _metric_doc(chart: MetricChart) -> dict:
    if isinstance(chart, FlatTorusChart):
        return {"kind": "flat-torus", "lattice": [[float(x) for x in row] for row in chart.lattice]}
    if isinstance(chart, StereographicSphereChart):
        return {"kind": "stereographic-sphere", "radius": chart.radius, "dim": chart.dim}
    if isinstance(chart, EuclideanChart):
        doc = {"kind": "euclidean", "dim": chart.dim}
        if chart.box is not None:
            doc["box"] = [[float(x) for x in b] for b in chart.box]
        return doc
    raise SpecError("metric cannot be serialized")


def write_spec(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

def results_document(command: str, options: dict, report: dict) -> dict:
    return {
        "tool": "geodesicnets",
        "version": TOOL_VERSION,
        "command": command,
        "options": options,
        "report": report,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def write_results(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_plot_csv(net: GeodesicNet, path: str, fields: dict | None = None) -> None:
    """Per-edge samples: edge id, t, coordinates, optional field columns.

    Floats carry 17 significant digits so a re-ingested file reproduces
    lengths bit-faithfully.
    """
    dim = net.dim
    cols = ["edge", "t"] + [f"x{i+1}" for i in range(dim)]
    if fields:
        cols += [f"f{i+1}" for i in range(dim)]
    lines = [",".join(cols)]
    for e in net.graph.edges:
        s = net.edge_samples[e.id]
        t = np.linspace(0.0, 1.0, s.shape[0])
        for k in range(s.shape[0]):
            row = [e.id, format(t[k], ".17g")] + [format(x, ".17g") for x in s[k]]
            if fields:
                row += [format(x, ".17g") for x in fields[e.id][k]]
            lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_plot_csv(path: str) -> dict[str, np.ndarray]:
    """Re-ingest an exported CSV: edge id -> sample array."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        dim = sum(1 for c in header if c.startswith("x"))
        rows: dict[str, list] = {}
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            rows.setdefault(parts[0], []).append([float(x) for x in parts[2 : 2 + dim]])
    return {e: np.asarray(v) for e, v in rows.items()}
