"""Built-in experiment nets.

honeycomb-torus   three unit edges between two vertices on a hexagonal
                  flat torus, vertices balanced at 120 degrees
sphere-theta      two polar vertices joined by three meridians of the unit
                  sphere, drawn in a stereographic chart whose projection
                  point sits on the equator away from the meridians
sphere-equator    the equator as a smooth closed loop in the north-pole
                  stereographic chart
flat-loop         a closed straight geodesic on the hexagonal flat torus
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import FlatTorusChart, MetricChart, StereographicSphereChart
from .multigraph import WeightedMultigraph
from .net import GeodesicNet, edge_lengths

__all__ = ["Case", "make_case", "CASE_NAMES", "HEX_LATTICE"]

HEX_LATTICE = np.array([[1.5, np.sqrt(3.0) / 2.0], [1.5, -np.sqrt(3.0) / 2.0]])

CASE_NAMES = ("honeycomb-torus", "sphere-theta", "sphere-equator", "flat-loop")


@dataclass
class Case:
    name: str
    chart: MetricChart
    net: GeodesicNet
    options: dict = field(default_factory=dict)


def _grid(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 1)


def _honeycomb(n_samples: int) -> tuple[MetricChart, GeodesicNet]:
    chart = FlatTorusChart(HEX_LATTICE)
    graph = WeightedMultigraph.build(
        ["A", "B"],
        [("E1", "A", "B", 1), ("E2", "A", "B", 1), ("E3", "A", "B", 1)],
    )
    a = np.array([0.0, 0.0])
    targets = {
        "E1": np.array([1.0, 0.0]),
        "E2": np.array([-0.5, np.sqrt(3.0) / 2.0]),
        "E3": np.array([-0.5, -np.sqrt(3.0) / 2.0]),
    }
    t = _grid(n_samples)
    samples = {e: (1 - t)[:, None] * a + t[:, None] * tgt for e, tgt in targets.items()}
    net = GeodesicNet(
        graph=graph,
        edge_samples=samples,
        vertex_positions={"A": a, "B": np.array([1.0, 0.0])},
        constant_speed=True,
    )
    net.lengths = edge_lengths(chart, net)
    return chart, net


def _sphere_frame():
    """Orthonormal frame whose third axis is the projection point
    (equator, longitude 60 degrees)."""
    e3 = np.array([0.5, np.sqrt(3.0) / 2.0, 0.0])
    e1 = np.array([0.0, 0.0, 1.0])
    e2 = np.cross(e3, e1)
    return e1, e2, e3


def _stereographic(y: np.ndarray) -> np.ndarray:
    e1, e2, e3 = _sphere_frame()
    y1 = y @ e1
    y2 = y @ e2
    y3 = y @ e3
    return np.stack([y1, y2], axis=-1) / (1.0 - y3)[..., None]


def _sphere_theta(n_samples: int) -> tuple[MetricChart, GeodesicNet]:
    chart = StereographicSphereChart(radius=1.0)
    graph = WeightedMultigraph.build(
        ["N", "S"],
        [("E1", "N", "S", 1), ("E2", "N", "S", 1), ("E3", "N", "S", 1)],
    )
    t = _grid(n_samples)
    theta = np.pi * t
    samples = {}
    for eid, lon in (("E1", 0.0), ("E2", 2 * np.pi / 3), ("E3", 4 * np.pi / 3)):
        y = np.stack(
            [np.sin(theta) * np.cos(lon), np.sin(theta) * np.sin(lon), np.cos(theta)],
            axis=1,
        )
        samples[eid] = _stereographic(y)
    north = _stereographic(np.array([0.0, 0.0, 1.0]))
    south = _stereographic(np.array([0.0, 0.0, -1.0]))
    net = GeodesicNet(
        graph=graph,
        edge_samples=samples,
        vertex_positions={"N": north, "S": south},
        constant_speed=True,
    )
    net.lengths = edge_lengths(chart, net)
    return chart, net


def _sphere_equator(n_samples: int, multiplicity: int = 1) -> tuple[MetricChart, GeodesicNet]:
    chart = StereographicSphereChart(radius=1.0)
    graph = WeightedMultigraph.build(["V"], [("E", "V", "V", multiplicity)])
    t = _grid(n_samples)
    samples = {"E": np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1)}
    samples["E"][-1] = samples["E"][0]
    net = GeodesicNet(
        graph=graph,
        edge_samples=samples,
        vertex_positions={"V": np.array([1.0, 0.0])},
        periodic_edges=frozenset({"E"}),
        constant_speed=True,
    )
    net.lengths = edge_lengths(chart, net)
    return chart, net


def _flat_loop(n_samples: int, multiplicity: int = 1) -> tuple[MetricChart, GeodesicNet]:
    chart = FlatTorusChart(HEX_LATTICE)
    graph = WeightedMultigraph.build(["V"], [("E", "V", "V", multiplicity)])
    t = _grid(n_samples)
    lam = HEX_LATTICE[0]
    samples = {"E": t[:, None] * lam}
    net = GeodesicNet(
        graph=graph,
        edge_samples=samples,
        vertex_positions={"V": np.zeros(2)},
        periodic_edges=frozenset({"E"}),
        constant_speed=True,
    )
    net.lengths = edge_lengths(chart, net)
    return chart, net


def make_case(name: str, n_samples: int = 64, multiplicity: int = 1) -> Case:
    """Build one of the named experiment nets at the given resolution."""
    if name == "honeycomb-torus":
        chart, net = _honeycomb(n_samples)
    elif name == "sphere-theta":
        chart, net = _sphere_theta(n_samples)
    elif name == "sphere-equator":
        chart, net = _sphere_equator(n_samples, multiplicity)
    elif name == "flat-loop":
        chart, net = _flat_loop(n_samples, multiplicity)
    else:
        raise KeyError(f"unknown case {name!r}; choose from {CASE_NAMES}")
    return Case(name=name, chart=chart, net=net, options={"n_samples": n_samples})
