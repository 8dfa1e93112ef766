"""Parametric Brep data model and its JSON exchange format.

A model is a flat container of parametric surfaces and curves plus the
topology that ties them together: faces (a surface with trimming loops given
as UV polylines) and topological edges (a bounded curve shared between two
faces). The exchange format is a purpose-built ``.brep.json`` document; see
``parse_brep`` for the schema.

Entities are immutable after construction and safe to share across threads.
Parsing and validation are pure functions of the input text.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from ._poly2d import loop_bbox, loop_segments, segment_sets_min_distance

AXIS_TOL = 1e-9
LOOP_TOL = 1e-9

SURFACE_KINDS = ("plane", "cylinder", "cone", "sphere", "torus", "bezier_patch")
CURVE_KINDS = ("line", "circle_arc", "ellipse_arc", "bezier")

# Fixed code tables so emitted tensors are reproducible across runs.
FACE_TYPE_CODES = {kind: i for i, kind in enumerate(SURFACE_KINDS)}
EDGE_TYPE_CODES = {kind: i for i, kind in enumerate(CURVE_KINDS)}


class BrepParseError(ValueError):
    """Raised when a document cannot be parsed into a valid model.

    ``where`` carries a 1-based line/column or a JSON-pointer-style path.
    """

    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class UVRect(NamedTuple):
    u_min: float
    u_max: float
    v_min: float
    v_max: float

    @property
    def u_span(self) -> float:
        return self.u_max - self.u_min

    @property
    def v_span(self) -> float:
        return self.v_max - self.v_min


@dataclass
class Surface:
    """Parametric surface patch with an orthonormal placement frame.

    ``params`` holds the per-kind scalars (radii in model units, angles in
    radians); Bezier patches carry a (p+1, q+1, 3) control net in frame
    coordinates instead.
    """

    kind: str
    origin: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray
    params: dict[str, float]
    u_range: tuple[float, float]
    v_range: tuple[float, float]
    control_points: np.ndarray | None = None

    @property
    def natural_rect(self) -> UVRect:
        return UVRect(self.u_range[0], self.u_range[1],
                      self.v_range[0], self.v_range[1])

    def frame_matrix(self) -> np.ndarray:
        """Columns are the x/y/z axes: maps frame coordinates to world."""
        return np.stack([self.x_axis, self.y_axis, self.z_axis], axis=1)


@dataclass
class Curve:
    """Bounded parametric space curve with a placement frame."""

    kind: str
    origin: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray
    params: dict[str, float]
    t_range: tuple[float, float]
    control_points: np.ndarray | None = None

    def frame_matrix(self) -> np.ndarray:
        return np.stack([self.x_axis, self.y_axis, self.z_axis], axis=1)


@dataclass
class Face:
    """Trimmed surface patch.

    ``loops`` are open rings in UV space; the first is the outer boundary and
    the rest are holes. The visible region is decided by even-odd parity, so
    loop orientation is irrelevant.
    """

    surface_index: int
    same_sense: bool
    loops: list[np.ndarray]
    face_type_code: int


@dataclass
class TopoEdge:
    """Bounded curve segment shared between two faces (equal pair = seam)."""

    curve_index: int
    t_range: tuple[float, float]
    incident_faces: tuple[int, int]
    edge_type_code: int


@dataclass
class BrepModel:
    name: str
    surfaces: list[Surface]
    curves: list[Curve]
    faces: list[Face]
    edges: list[TopoEdge]


@dataclass
class ValidationIssue:
    severity: str  # "error" | "warning"
    entity: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity} {self.entity}: {self.message}"


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def errors(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def add(self, severity: str, entity: str, message: str) -> None:
        self.issues.append(ValidationIssue(severity, entity, message))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _need(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise BrepParseError(f"missing required key '{key}'", path)
    return obj[key]


def _vec3(value: Any, path: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise BrepParseError("expected a finite [x, y, z] triple", path)
    return arr


def _pair(value: Any, path: str) -> tuple[float, float]:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (2,) or not np.all(np.isfinite(arr)):
        raise BrepParseError("expected a finite [a, b] pair", path)
    return float(arr[0]), float(arr[1])


def _scalar(params: dict, key: str, path: str) -> float:
    value = _need(params, key, path)
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise BrepParseError(f"'{key}' must be a finite number", f"{path}/{key}")
    return float(value)


_SURFACE_SCALARS = {
    "plane": (),
    "cylinder": ("radius",),
    "cone": ("radius", "half_angle"),
    "sphere": ("radius",),
    "torus": ("major_radius", "minor_radius"),
    "bezier_patch": (),
}

_CURVE_SCALARS = {
    "line": (),
    "circle_arc": ("radius",),
    "ellipse_arc": ("semi_major", "semi_minor"),
    "bezier": (),
}


def _parse_frame(obj: dict, path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    origin = _vec3(_need(obj, "origin", path), f"{path}/origin")
    x_axis = _vec3(_need(obj, "x_axis", path), f"{path}/x_axis")
    y_axis = _vec3(_need(obj, "y_axis", path), f"{path}/y_axis")
    z_axis = np.cross(x_axis, y_axis)
    return origin, x_axis, y_axis, z_axis


def _parse_surface(obj: dict, path: str) -> Surface:
    kind = _need(obj, "kind", path)
    if kind not in SURFACE_KINDS:
        raise BrepParseError(f"unknown surface kind '{kind}'", f"{path}/kind")
    origin, x_axis, y_axis, z_axis = _parse_frame(obj, path)
    raw_params = obj.get("params", {})
    params = {key: _scalar(raw_params, key, f"{path}/params")
              for key in _SURFACE_SCALARS[kind]}
    control = None
    if kind == "bezier_patch":
        net = np.asarray(_need(raw_params, "control_points", f"{path}/params"),
                         dtype=float)
        if net.ndim != 3 or net.shape[0] < 2 or net.shape[1] < 2 or net.shape[2] != 3:
            raise BrepParseError("control_points must be a (p+1, q+1, 3) net with p, q >= 1",
                                 f"{path}/params/control_points")
        if not np.all(np.isfinite(net)):
            raise BrepParseError("control_points must be finite",
                                 f"{path}/params/control_points")
        control = net
    u_range = _pair(_need(obj, "u_range", path), f"{path}/u_range")
    v_range = _pair(_need(obj, "v_range", path), f"{path}/v_range")
    return Surface(kind, origin, x_axis, y_axis, z_axis, params,
                   u_range, v_range, control)


def _parse_curve(obj: dict, path: str) -> Curve:
    kind = _need(obj, "kind", path)
    if kind not in CURVE_KINDS:
        raise BrepParseError(f"unknown curve kind '{kind}'", f"{path}/kind")
    origin, x_axis, y_axis, z_axis = _parse_frame(obj, path)
    raw_params = obj.get("params", {})
    params = {key: _scalar(raw_params, key, f"{path}/params")
              for key in _CURVE_SCALARS[kind]}
    control = None
    if kind == "bezier":
        pts = np.asarray(_need(raw_params, "control_points", f"{path}/params"),
                         dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 3:
            raise BrepParseError("control_points must be an (n+1, 3) list with n >= 1",
                                 f"{path}/params/control_points")
        if not np.all(np.isfinite(pts)):
            raise BrepParseError("control_points must be finite",
                                 f"{path}/params/control_points")
        control = pts
    t_range = _pair(_need(obj, "t_range", path), f"{path}/t_range")
    return Curve(kind, origin, x_axis, y_axis, z_axis, params, t_range, control)


def _rect_ring(u_range: tuple[float, float], v_range: tuple[float, float]) -> np.ndarray:
    u0, u1 = u_range
    v0, v1 = v_range
    return np.array([[u0, v0], [u1, v0], [u1, v1], [u0, v1]], dtype=float)


def _parse_loop(value: Any, path: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or not np.all(np.isfinite(arr)):
        raise BrepParseError("loop must be a list of finite [u, v] points", path)
    # Explicitly closed rings are normalized to the open form.
    if arr.shape[0] >= 2 and np.array_equal(arr[0], arr[-1]):
        arr = arr[:-1]
    if arr.shape[0] < 3:
        raise BrepParseError("loop needs at least 3 distinct vertices", path)
    return arr


def _parse_face(obj: dict, path: str, surfaces: list[Surface]) -> Face:
    surface_index = _need(obj, "surface", path)
    if not isinstance(surface_index, int) or not 0 <= surface_index < len(surfaces):
        raise BrepParseError(
            f"surface index {surface_index} out of range 0..{len(surfaces) - 1}",
            f"{path}/surface")
    surface = surfaces[surface_index]
    same_sense = obj.get("same_sense", True)
    if not isinstance(same_sense, bool):
        raise BrepParseError("same_sense must be a boolean", f"{path}/same_sense")
    raw_loops = obj.get("loops")
    if raw_loops:
        loops = [_parse_loop(loop, f"{path}/loops/{i}")
                 for i, loop in enumerate(raw_loops)]
    else:
        # Untrimmed face: default to the full natural rectangle.
        loops = [_rect_ring(surface.u_range, surface.v_range)]
    return Face(surface_index, same_sense, loops, FACE_TYPE_CODES[surface.kind])


def _parse_edge(obj: dict, path: str, curves: list[Curve], n_faces: int) -> TopoEdge:
    curve_index = _need(obj, "curve", path)
    if not isinstance(curve_index, int) or not 0 <= curve_index < len(curves):
        raise BrepParseError(
            f"curve index {curve_index} out of range 0..{len(curves) - 1}",
            f"{path}/curve")
    curve = curves[curve_index]
    t_range = _pair(obj["t_range"], f"{path}/t_range") if "t_range" in obj \
        else curve.t_range
    raw_faces = _need(obj, "faces", path)
    if (not isinstance(raw_faces, list) or len(raw_faces) != 2
            or not all(isinstance(i, int) for i in raw_faces)):
        raise BrepParseError("faces must be a pair of face indices", f"{path}/faces")
    for i in raw_faces:
        if not 0 <= i < n_faces:
            raise BrepParseError(
                f"dangling face index {i} (model has {n_faces} faces)",
                f"{path}.incident_faces")
    return TopoEdge(curve_index, t_range, (raw_faces[0], raw_faces[1]),
                    EDGE_TYPE_CODES[curve.kind])


def parse_brep(document: str) -> BrepModel:
    """Parse a ``.brep.json`` document into a validated model.

    Top-level keys: ``name``, ``surfaces[]``, ``curves[]``, ``faces[]``,
    ``edges[]``. Every field is either read or defaulted (``name`` -> "",
    ``same_sense`` -> true, missing ``loops`` -> the natural rectangle,
    missing edge ``t_range`` -> the curve interval). Angles are radians.

    Raises ``BrepParseError`` on syntax errors (1-based line/column), unknown
    kinds, dangling indices, and any error-severity invariant violation.
    """
    try:
        root = json.loads(document)
    except json.JSONDecodeError as exc:
        raise BrepParseError(f"syntax error: {exc.msg}",
                             f"line {exc.lineno}, column {exc.colno}") from exc
    if not isinstance(root, dict):
        raise BrepParseError("top level must be a JSON object", "/")

    name = root.get("name", "")
    if not isinstance(name, str):
        raise BrepParseError("name must be a string", "/name")

    surfaces = [_parse_surface(obj, f"surfaces[{i}]")
                for i, obj in enumerate(root.get("surfaces", []))]
    curves = [_parse_curve(obj, f"curves[{i}]")
              for i, obj in enumerate(root.get("curves", []))]
    raw_faces = root.get("faces", [])
    faces = [_parse_face(obj, f"faces[{i}]", surfaces)
             for i, obj in enumerate(raw_faces)]
    edges = [_parse_edge(obj, f"edges[{i}]", curves, len(faces))
             for i, obj in enumerate(root.get("edges", []))]

    model = BrepModel(name, surfaces, curves, faces, edges)
    report = validate(model)
    if not report.ok:
        first = report.errors[0]
        raise BrepParseError(first.message, first.entity)
    return model


def serialize_brep(model: BrepModel) -> str:
    """Emit the exchange-format document; parse(serialize(m)) == m exactly."""
    def frame(entity) -> dict:
        return {"origin": entity.origin.tolist(),
                "x_axis": entity.x_axis.tolist(),
                "y_axis": entity.y_axis.tolist()}

    surfaces = []
    for s in model.surfaces:
        params: dict[str, Any] = dict(s.params)
        if s.control_points is not None:
            params["control_points"] = s.control_points.tolist()
        surfaces.append({"kind": s.kind, **frame(s), "params": params,
                         "u_range": list(s.u_range), "v_range": list(s.v_range)})
    curves = []
    for c in model.curves:
        params = dict(c.params)
        if c.control_points is not None:
            params["control_points"] = c.control_points.tolist()
        curves.append({"kind": c.kind, **frame(c), "params": params,
                       "t_range": list(c.t_range)})
    faces = [{"surface": f.surface_index, "same_sense": f.same_sense,
              "loops": [loop.tolist() for loop in f.loops]}
             for f in model.faces]
    edges = [{"curve": e.curve_index, "t_range": list(e.t_range),
              "faces": list(e.incident_faces)}
             for e in model.edges]
    doc = {"name": model.name, "surfaces": surfaces, "curves": curves,
           "faces": faces, "edges": edges}
    return json.dumps(doc, indent=1)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _check_surface(s: Surface, entity: str, report: ValidationReport) -> None:
    for label, axis in (("x_axis", s.x_axis), ("y_axis", s.y_axis)):
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_TOL:
            report.add("error", entity, f"{label} is not unit length")
    if abs(float(np.dot(s.x_axis, s.y_axis))) > AXIS_TOL:
        report.add("error", entity, "x_axis and y_axis are not orthogonal")
    if s.kind in ("cylinder", "sphere") and s.params["radius"] <= 0.0:
        report.add("error", entity, f"radius {s.params['radius']} must be > 0")
    if s.kind == "cone":
        if s.params["radius"] <= 0.0:
            report.add("error", entity, f"radius {s.params['radius']} must be > 0")
        if not 0.0 < s.params["half_angle"] < math.pi / 2:
            report.add("error", entity,
                       f"half_angle {s.params['half_angle']} must lie in (0, pi/2)")
    if s.kind == "torus":
        major, minor = s.params["major_radius"], s.params["minor_radius"]
        if minor <= 0.0 or major <= 0.0:
            report.add("error", entity, "torus radii must be > 0")
        elif minor >= major:
            report.add("error", entity,
                       f"minor radius {minor} must be smaller than major radius {major}")
    if s.u_range[0] >= s.u_range[1]:
        report.add("error", entity, f"u_range {list(s.u_range)} must be increasing")
    if s.v_range[0] >= s.v_range[1]:
        report.add("error", entity, f"v_range {list(s.v_range)} must be increasing")


def _check_curve(c: Curve, entity: str, report: ValidationReport) -> None:
    for label, axis in (("x_axis", c.x_axis), ("y_axis", c.y_axis)):
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_TOL:
            report.add("error", entity, f"{label} is not unit length")
    if abs(float(np.dot(c.x_axis, c.y_axis))) > AXIS_TOL:
        report.add("error", entity, "x_axis and y_axis are not orthogonal")
    if c.kind == "circle_arc" and c.params["radius"] <= 0.0:
        report.add("error", entity, f"radius {c.params['radius']} must be > 0")
    if c.kind == "ellipse_arc":
        if c.params["semi_major"] <= 0.0 or c.params["semi_minor"] <= 0.0:
            report.add("error", entity, "semi-axes must be > 0")
    if c.t_range[0] >= c.t_range[1]:
        report.add("error", entity, f"t_range {list(c.t_range)} must be increasing")


def _loop_excursion(loop: np.ndarray, rect: UVRect) -> float:
    """Largest single-axis distance any vertex falls outside the rectangle."""
    over = np.stack([
        rect.u_min - loop[:, 0], loop[:, 0] - rect.u_max,
        rect.v_min - loop[:, 1], loop[:, 1] - rect.v_max,
    ])
    return float(np.maximum(over, 0.0).max())


def _check_face(model: BrepModel, face_index: int, report: ValidationReport) -> None:
    face = model.faces[face_index]
    entity = f"faces[{face_index}]"
    if not 0 <= face.surface_index < len(model.surfaces):
        report.add("error", entity, f"surface index {face.surface_index} dangles")
        return
    surface = model.surfaces[face.surface_index]
    if face.face_type_code != FACE_TYPE_CODES[surface.kind]:
        report.add("error", entity,
                   f"face_type_code {face.face_type_code} does not match "
                   f"surface kind '{surface.kind}'")
    rect = surface.natural_rect
    for k, loop in enumerate(face.loops):
        if loop.shape[0] < 3:
            report.add("error", f"{entity}.loops[{k}]",
                       "loop needs at least 3 vertices")
            continue
        excursion = _loop_excursion(loop, rect)
        if excursion > LOOP_TOL:
            report.add("error", f"{entity}.loops[{k}]",
                       f"loop exits the parameter rectangle by {excursion:.6g}")
    # Distinct loops of one face must not touch or cross each other.
    for a in range(len(face.loops)):
        for b in range(a + 1, len(face.loops)):
            sa, ea = loop_segments(face.loops[a])
            sb, eb = loop_segments(face.loops[b])
            if segment_sets_min_distance(sa, ea, sb, eb) <= LOOP_TOL:
                report.add("error", entity, f"loops {a} and {b} intersect")


def _check_edge(model: BrepModel, edge_index: int, report: ValidationReport) -> None:
    edge = model.edges[edge_index]
    entity = f"edges[{edge_index}]"
    if not 0 <= edge.curve_index < len(model.curves):
        report.add("error", entity, f"curve index {edge.curve_index} dangles")
        return
    curve = model.curves[edge.curve_index]
    if edge.edge_type_code != EDGE_TYPE_CODES[curve.kind]:
        report.add("error", entity,
                   f"edge_type_code {edge.edge_type_code} does not match "
                   f"curve kind '{curve.kind}'")
    t0, t1 = edge.t_range
    if t0 >= t1:
        report.add("error", entity, f"t_range {[t0, t1]} must be increasing")
    if t0 < curve.t_range[0] - LOOP_TOL or t1 > curve.t_range[1] + LOOP_TOL:
        report.add("error", entity,
                   f"t_range {[t0, t1]} exceeds curve interval {list(curve.t_range)}")
    for i in edge.incident_faces:
        if not 0 <= i < len(model.faces):
            report.add("error", f"{entity}.incident_faces",
                       f"dangling face index {i} (model has {len(model.faces)} faces)")
    if edge.incident_faces[0] == edge.incident_faces[1]:
        report.add("warning", entity,
                   f"seam edge: both sides lie on face {edge.incident_faces[0]}")


def validate(model: BrepModel) -> ValidationReport:
    """Check every model invariant; violations are reported, never raised.

    Seam edges are legal input and surface as warnings; ``report.ok`` is true
    when no error-severity issue exists.
    """
    report = ValidationReport()
    for i, s in enumerate(model.surfaces):
        _check_surface(s, f"surfaces[{i}]", report)
    for i, c in enumerate(model.curves):
        _check_curve(c, f"curves[{i}]", report)
    if not model.faces:
        report.add("error", "faces", "model has no faces")
    for i in range(len(model.faces)):
        _check_face(model, i, report)
    for i in range(len(model.edges)):
        _check_edge(model, i, report)
    return report


def face_uv_domain(model: BrepModel, face_index: int) -> UVRect:
    """Bounding rectangle of the face's outer loop, clipped to the surface's
    natural rectangle."""
    if not 0 <= face_index < len(model.faces):
        raise IndexError(f"face index {face_index} out of range")
    face = model.faces[face_index]
    rect = model.surfaces[face.surface_index].natural_rect
    u_min, u_max, v_min, v_max = loop_bbox(face.loops[0])
    return UVRect(max(u_min, rect.u_min), min(u_max, rect.u_max),
                  max(v_min, rect.v_min), min(v_max, rect.v_max))
