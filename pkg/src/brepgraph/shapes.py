"""Canned Brep documents and a randomized model generator.

Builders return plain exchange-format dicts so tests can tweak fields before
parsing; ``as_document``/``as_model`` wrap the common conversions.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .model import BrepModel, parse_brep


def as_document(doc: dict) -> str:
    return json.dumps(doc)


def as_model(doc: dict) -> BrepModel:
    return parse_brep(as_document(doc))


def _plane(origin, x_axis, y_axis, u_range, v_range) -> dict:
    return {"kind": "plane", "origin": list(origin), "x_axis": list(x_axis),
            "y_axis": list(y_axis), "params": {},
            "u_range": list(u_range), "v_range": list(v_range)}


def _line(origin, direction, y_axis, t_range=(0.0, 1.0)) -> dict:
    return {"kind": "line", "origin": list(origin), "x_axis": list(direction),
            "y_axis": list(y_axis), "params": {}, "t_range": list(t_range)}


def unit_cube(name: str = "cube") -> dict:
    """Axis-aligned unit cube: 6 planar faces, 12 line edges, all degrees 4."""
    X, Y, Z = (1, 0, 0), (0, 1, 0), (0, 0, 1)
    surfaces = [
        _plane((0, 0, 0), X, Y, (0, 1), (0, 1)),   # bottom z=0
        _plane((0, 0, 1), X, Y, (0, 1), (0, 1)),   # top z=1
        _plane((0, 0, 0), X, Z, (0, 1), (0, 1)),   # front y=0
        _plane((0, 1, 0), X, Z, (0, 1), (0, 1)),   # back y=1
        _plane((0, 0, 0), Y, Z, (0, 1), (0, 1)),   # left x=0
        _plane((1, 0, 0), Y, Z, (0, 1), (0, 1)),   # right x=1
    ]
    faces = [{"surface": i, "same_sense": True} for i in range(6)]
    # (corner, direction, perpendicular, incident face pair)
    edge_table = [
        ((0, 0, 0), X, Y, (0, 2)), ((1, 0, 0), Y, Z, (0, 5)),
        ((0, 1, 0), X, Y, (0, 3)), ((0, 0, 0), Y, Z, (0, 4)),
        ((0, 0, 1), X, Y, (1, 2)), ((1, 0, 1), Y, Z, (1, 5)),
        ((0, 1, 1), X, Y, (1, 3)), ((0, 0, 1), Y, Z, (1, 4)),
        ((0, 0, 0), Z, X, (2, 4)), ((1, 0, 0), Z, X, (2, 5)),
        ((1, 1, 0), Z, X, (3, 5)), ((0, 1, 0), Z, X, (3, 4)),
    ]
    curves = [_line(corner, d, p) for corner, d, p, _ in edge_table]
    edges = [{"curve": k, "t_range": [0.0, 1.0], "faces": list(pair)}
             for k, (_, _, _, pair) in enumerate(edge_table)]
    return {"name": name, "surfaces": surfaces, "curves": curves,
            "faces": faces, "edges": edges}


def _circle_ring(radius: float, segments: int = 64) -> list[list[float]]:
    theta = np.linspace(0.0, 2.0 * math.pi, segments, endpoint=False)
    return np.stack([radius * np.cos(theta), radius * np.sin(theta)],
                    axis=1).tolist()


def closed_cylinder(radius: float = 1.0, height: float = 1.0,
                    name: str = "cylinder") -> dict:
    """Cylindrical side plus two trimmed planar caps; the side carries a seam
    edge (both incidences on itself)."""
    X, Y = (1, 0, 0), (0, 1, 0)
    surfaces = [
        {"kind": "cylinder", "origin": [0, 0, 0], "x_axis": list(X),
         "y_axis": list(Y), "params": {"radius": radius},
         "u_range": [0.0, 2.0 * math.pi], "v_range": [0.0, height]},
        _plane((0, 0, height), X, Y, (-radius, radius), (-radius, radius)),
        _plane((0, 0, 0), X, Y, (-radius, radius), (-radius, radius)),
    ]
    disc = _circle_ring(radius)
    faces = [
        {"surface": 0, "same_sense": True},
        {"surface": 1, "same_sense": True, "loops": [disc]},
        {"surface": 2, "same_sense": False, "loops": [disc]},
    ]
    curves = [
        {"kind": "circle_arc", "origin": [0, 0, height], "x_axis": list(X),
         "y_axis": list(Y), "params": {"radius": radius},
         "t_range": [0.0, 2.0 * math.pi]},
        {"kind": "circle_arc", "origin": [0, 0, 0], "x_axis": list(X),
         "y_axis": list(Y), "params": {"radius": radius},
         "t_range": [0.0, 2.0 * math.pi]},
        _line((radius, 0, 0), (0, 0, 1), X, (0.0, height)),
    ]
    edges = [
        {"curve": 0, "faces": [0, 1]},
        {"curve": 1, "faces": [0, 2]},
        {"curve": 2, "faces": [0, 0]},  # seam
    ]
    return {"name": name, "surfaces": surfaces, "curves": curves,
            "faces": faces, "edges": edges}


def plate_with_hole(side: float = 1.0, hole: float = 0.5,
                    name: str = "plate") -> dict:
    """Planar square face with a centered square hole (area side^2 - hole^2)."""
    lo = (side - hole) / 2.0
    hi = lo + hole
    outer = [[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]]
    inner = [[lo, lo], [hi, lo], [hi, hi], [lo, hi]]
    return {"name": name,
            "surfaces": [_plane((0, 0, 0), (1, 0, 0), (0, 1, 0),
                                (0, side), (0, side))],
            "curves": [],
            "faces": [{"surface": 0, "same_sense": True,
                       "loops": [outer, inner]}],
            "edges": []}


def sphere_model(radius: float = 1.0, name: str = "sphere") -> dict:
    """Full sphere in longitude/latitude parameterization, one untrimmed face."""
    return {"name": name,
            "surfaces": [{"kind": "sphere", "origin": [0, 0, 0],
                          "x_axis": [1, 0, 0], "y_axis": [0, 1, 0],
                          "params": {"radius": radius},
                          "u_range": [0.0, 2.0 * math.pi],
                          "v_range": [-math.pi / 2, math.pi / 2]}],
            "curves": [],
            "faces": [{"surface": 0, "same_sense": True}],
            "edges": []}


def torus_model(major: float = 2.0, minor: float = 0.5,
                name: str = "torus") -> dict:
    return {"name": name,
            "surfaces": [{"kind": "torus", "origin": [0, 0, 0],
                          "x_axis": [1, 0, 0], "y_axis": [0, 1, 0],
                          "params": {"major_radius": major,
                                     "minor_radius": minor},
                          "u_range": [0.0, 2.0 * math.pi],
                          "v_range": [-math.pi, math.pi]}],
            "curves": [],
            "faces": [{"surface": 0, "same_sense": True}],
            "edges": []}


def cone_model(radius: float = 1.0, half_angle: float = math.pi / 6,
               height: float = 1.0, name: str = "cone") -> dict:
    return {"name": name,
            "surfaces": [{"kind": "cone", "origin": [0, 0, 0],
                          "x_axis": [1, 0, 0], "y_axis": [0, 1, 0],
                          "params": {"radius": radius,
                                     "half_angle": half_angle},
                          "u_range": [0.0, 2.0 * math.pi],
                          "v_range": [0.0, height]}],
            "curves": [],
            "faces": [{"surface": 0, "same_sense": True}],
            "edges": []}


def bezier_dome(name: str = "dome") -> dict:
    """Biquadratic patch over [0,1]^2: flat 3x3 net with the center raised."""
    net = [[[i / 2, j / 2, 0.0] for j in range(3)] for i in range(3)]
    net[1][1][2] = 1.0
    return {"name": name,
            "surfaces": [{"kind": "bezier_patch", "origin": [0, 0, 0],
                          "x_axis": [1, 0, 0], "y_axis": [0, 1, 0],
                          "params": {"control_points": net},
                          "u_range": [0.0, 1.0], "v_range": [0.0, 1.0]}],
            "curves": [],
            "faces": [{"surface": 0, "same_sense": True}],
            "edges": []}


def two_cubes(offset: float = 2.0, name: str = "two-cubes") -> dict:
    """Disjoint union of two unit cubes; 12 faces, 24 edges, 2 components."""
    doc = unit_cube(name)
    other = unit_cube()
    for s in other["surfaces"]:
        s["origin"][0] += offset
    for c in other["curves"]:
        c["origin"][0] += offset
    n_faces, n_curves = len(doc["faces"]), len(doc["curves"])
    n_surfaces = len(doc["surfaces"])
    doc["surfaces"] += other["surfaces"]
    doc["curves"] += other["curves"]
    doc["faces"] += [{"surface": f["surface"] + n_surfaces,
                      "same_sense": f["same_sense"]}
                     for f in other["faces"]]
    doc["edges"] += [{"curve": e["curve"] + n_curves,
                      "t_range": e["t_range"],
                      "faces": [i + n_faces for i in e["faces"]]}
                     for e in other["edges"]]
    return doc


# ---------------------------------------------------------------------------
# randomized models
# ---------------------------------------------------------------------------

def _random_frame(rng: np.random.Generator):
    x = rng.normal(size=3)
    x /= np.linalg.norm(x)
    y = rng.normal(size=3)
    y -= x * np.dot(x, y)
    y /= np.linalg.norm(y)
    return x, y


def _random_surface(rng: np.random.Generator) -> dict:
    kind = rng.choice(["plane", "cylinder", "cone", "sphere", "torus",
                       "bezier_patch"])
    x, y = _random_frame(rng)
    origin = rng.uniform(-5, 5, size=3)
    base = {"kind": str(kind), "origin": origin.tolist(),
            "x_axis": x.tolist(), "y_axis": y.tolist(), "params": {}}
    span = float(rng.uniform(0.3, 4.0))
    if kind == "plane":
        base["u_range"] = [0.0, span]
        base["v_range"] = [0.0, float(rng.uniform(0.3, 4.0))]
    elif kind == "cylinder":
        base["params"] = {"radius": float(rng.uniform(0.2, 3.0))}
        base["u_range"] = [0.0, float(rng.uniform(1.0, 2 * math.pi))]
        base["v_range"] = [0.0, span]
    elif kind == "cone":
        base["params"] = {"radius": float(rng.uniform(0.2, 3.0)),
                          "half_angle": float(rng.uniform(0.1, 1.3))}
        base["u_range"] = [0.0, float(rng.uniform(1.0, 2 * math.pi))]
        base["v_range"] = [0.0, span]
    elif kind == "sphere":
        base["params"] = {"radius": float(rng.uniform(0.2, 3.0))}
        base["u_range"] = [0.0, float(rng.uniform(1.0, 2 * math.pi))]
        base["v_range"] = [-1.3, float(rng.uniform(-0.5, 1.3))]
    elif kind == "torus":
        major = float(rng.uniform(1.0, 4.0))
        base["params"] = {"major_radius": major,
                          "minor_radius": float(rng.uniform(0.1, 0.8 * major))}
        base["u_range"] = [0.0, float(rng.uniform(1.0, 2 * math.pi))]
        base["v_range"] = [-math.pi, math.pi]
    else:  # bezier_patch
        p = int(rng.integers(1, 4))
        q = int(rng.integers(1, 4))
        grid_u, grid_v = np.meshgrid(np.linspace(0, span, p + 1),
                                     np.linspace(0, span, q + 1), indexing="ij")
        net = np.stack([grid_u, grid_v,
                        rng.uniform(-0.3 * span, 0.3 * span,
                                    size=grid_u.shape)], axis=-1)
        base["params"] = {"control_points": net.tolist()}
        base["u_range"] = [0.0, 1.0]
        base["v_range"] = [0.0, 1.0]
    return base


def _random_trim(rng: np.random.Generator, u_range, v_range) -> list:
    """Sub-rectangle outer loop, sometimes with a hole strictly inside it."""
    u0, u1 = u_range
    v0, v1 = v_range
    du, dv = u1 - u0, v1 - v0
    a = u0 + float(rng.uniform(0.0, 0.3)) * du
    b = u0 + float(rng.uniform(0.6, 1.0)) * du
    c = v0 + float(rng.uniform(0.0, 0.3)) * dv
    d = v0 + float(rng.uniform(0.6, 1.0)) * dv
    loops = [[[a, c], [b, c], [b, d], [a, d]]]
    if rng.random() < 0.4:
        mu, mv = (a + b) / 2, (c + d) / 2
        hu = (b - a) * float(rng.uniform(0.1, 0.3))
        hv = (d - c) * float(rng.uniform(0.1, 0.3))
        loops.append([[mu - hu, mv - hv], [mu + hu, mv - hv],
                      [mu + hu, mv + hv], [mu - hu, mv + hv]])
    return loops


def _random_curve(rng: np.random.Generator) -> dict:
    kind = rng.choice(["line", "circle_arc", "ellipse_arc", "bezier"])
    x, y = _random_frame(rng)
    base = {"kind": str(kind), "origin": rng.uniform(-5, 5, size=3).tolist(),
            "x_axis": x.tolist(), "y_axis": y.tolist(), "params": {}}
    if kind == "line":
        base["t_range"] = [0.0, float(rng.uniform(0.2, 6.0))]
    elif kind == "circle_arc":
        base["params"] = {"radius": float(rng.uniform(0.2, 3.0))}
        base["t_range"] = [0.0, float(rng.uniform(0.5, 2 * math.pi))]
    elif kind == "ellipse_arc":
        a = float(rng.uniform(0.5, 3.0))
        base["params"] = {"semi_major": a,
                          "semi_minor": float(rng.uniform(0.2, a))}
        base["t_range"] = [0.0, float(rng.uniform(0.5, 2 * math.pi))]
    else:
        n = int(rng.integers(3, 6))
        # Monotone x offsets keep the derivative away from zero.
        pts = np.cumsum(rng.uniform(0.2, 1.0, size=(n, 3)), axis=0)
        base["params"] = {"control_points": pts.tolist()}
        base["t_range"] = [0.0, 1.0]
    return base


def random_model(rng: np.random.Generator, max_faces: int = 5,
                 name: str = "random") -> dict:
    """Mixed-kind model with random trims and random edge topology."""
    n_faces = int(rng.integers(2, max_faces + 1))
    surfaces = [_random_surface(rng) for _ in range(n_faces)]
    faces = []
    for i, s in enumerate(surfaces):
        face = {"surface": i, "same_sense": bool(rng.random() < 0.8)}
        if rng.random() < 0.5:
            face["loops"] = _random_trim(rng, s["u_range"], s["v_range"])
        faces.append(face)
    n_edges = int(rng.integers(1, 2 * n_faces + 1))
    curves = [_random_curve(rng) for _ in range(n_edges)]
    edges = []
    for k in range(n_edges):
        i = int(rng.integers(0, n_faces))
        j = int(rng.integers(0, n_faces))
        edges.append({"curve": k, "faces": [i, j]})
    return {"name": name, "surfaces": surfaces, "curves": curves,
            "faces": faces, "edges": edges}
