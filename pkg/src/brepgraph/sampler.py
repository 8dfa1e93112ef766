"""Adaptive UV sampling: per-face grids and per-edge point sequences.

Face grid resolution rises linearly with face area between the model's
extreme areas; edge sample counts do the same with arc length. Both land in
the configured clamp range (16..32 by default). Faces emit a
(rows x 10) attribute tensor [P, n, H, V, t, a]; edges an (M x 8) tensor
[Q, tangent, c, b]. Rows hidden by trimming keep their true surface
attributes with the visibility bit cleared; the mask, not omission, encodes
the trim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diffgeo
from .diffgeo import (
    DEGENERATE_TOL,
    DegenerateGeometryError,
    EdgeGeometrySummary,
    FaceGeometrySummary,
    local_surface_jet,
    mean_curvature_from_jet,
    points_in_face,
)
from .model import BrepModel, face_uv_domain

FACE_COLUMNS = 10  # [P.x, P.y, P.z, n.x, n.y, n.z, H, V, t, a]
EDGE_COLUMNS = 8   # [Q.x, Q.y, Q.z, tan.x, tan.y, tan.z, c, b]

NUDGE_FRACTION = 1e-6  # inward shift of pole-degenerate samples, per axis


@dataclass(frozen=True)
class SamplerConfig:
    face_min: int = 16
    face_max: int = 32
    edge_min: int = 16
    edge_max: int = 32
    clamp_lo: int = 16
    clamp_hi: int = 32
    face_quadrature: int = 32
    edge_quadrature: int = 32

    def __post_init__(self):
        if not 0 < self.face_min <= self.face_max:
            raise ValueError("face resolution bounds must satisfy 0 < min <= max")
        if not 0 < self.edge_min <= self.edge_max:
            raise ValueError("edge resolution bounds must satisfy 0 < min <= max")
        if self.clamp_lo > self.clamp_hi:
            raise ValueError("clamp_lo must not exceed clamp_hi")


@dataclass
class FaceTensor:
    face_index: int
    grid_u: int
    grid_v: int
    rows: np.ndarray  # (grid_u * grid_v, 10), v varies fastest

    @property
    def resolution(self) -> int:
        return self.grid_u


@dataclass
class EdgeTensor:
    edge_index: int
    rows: np.ndarray  # (M, 8), ordered by increasing t

    @property
    def count(self) -> int:
        return self.rows.shape[0]


@dataclass
class SampledModel:
    model: BrepModel
    faces: list[FaceTensor]
    face_summaries: list[FaceGeometrySummary]
    edges: list[EdgeTensor]
    edge_summaries: list[EdgeGeometrySummary]
    area_min: float
    area_max: float
    length_min: float
    length_max: float


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def _resolution(value: float, lo: float, hi: float, out_min: int, out_max: int,
                clamp_lo: int, clamp_hi: int, what: str) -> int:
    if not lo <= value <= hi:
        raise ValueError(f"{what} {value} outside extrema [{lo}, {hi}]")
    # Equal extrema mean every entity is simultaneously the largest present.
    ratio = 1.0 if hi == lo else (value - lo) / (hi - lo)
    raw = out_min + ratio * (out_max - out_min)
    return min(max(_round_half_away(raw), clamp_lo), clamp_hi)


def face_resolution(area: float, area_min: float, area_max: float,
                    cfg: SamplerConfig = SamplerConfig()) -> int:
    """Per-axis grid resolution for a face of the given area."""
    return _resolution(area, area_min, area_max, cfg.face_min, cfg.face_max,
                       cfg.clamp_lo, cfg.clamp_hi, "face area")


def edge_resolution(length: float, length_min: float, length_max: float,
                    cfg: SamplerConfig = SamplerConfig()) -> int:
    """Sample count for an edge of the given length."""
    return _resolution(length, length_min, length_max, cfg.edge_min,
                       cfg.edge_max, cfg.clamp_lo, cfg.clamp_hi, "edge length")


def _nudge_inward(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    center = (lo + hi) / 2.0
    return values + np.sign(center - values) * (NUDGE_FRACTION * (hi - lo))


def sample_face(model: BrepModel, face_index: int, resolution: int,
                area_ratio: float | None = None,
                quadrature_per_axis: int = 32) -> FaceTensor:
    """Sample an inclusive resolution x resolution UV grid over the face.

    ``area_ratio`` is the face's normalized area (A / A_max over the model);
    when omitted it is computed here, which costs one quadrature pass per
    model face. Samples where the parameterization degenerates (sphere
    poles) are nudged toward the domain center instead of erroring.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    face = model.faces[face_index]
    surface = model.surfaces[face.surface_index]
    rect = face_uv_domain(model, face_index)
    if rect.u_span <= 0.0 or rect.v_span <= 0.0:
        raise ValueError(f"face {face_index} has a degenerate UV domain")
    if area_ratio is None:
        areas = [diffgeo.face_area(model, i, quadrature_per_axis).area
                 for i in range(len(model.faces))]
        area_ratio = areas[face_index] / max(areas)

    u = np.linspace(rect.u_min, rect.u_max, resolution)
    v = np.linspace(rect.v_min, rect.v_max, resolution)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    uu, vv = uu.ravel(), vv.ravel()

    jet = local_surface_jet(surface, uu, vv)
    cross = np.cross(jet.Su, jet.Sv)
    norms = np.linalg.norm(cross, axis=-1)
    degenerate = norms <= DEGENERATE_TOL
    if degenerate.any():
        uu = uu.copy()
        vv = vv.copy()
        uu[degenerate] = _nudge_inward(uu[degenerate], rect.u_min, rect.u_max)
        vv[degenerate] = _nudge_inward(vv[degenerate], rect.v_min, rect.v_max)
        jet = local_surface_jet(surface, uu, vv)
        cross = np.cross(jet.Su, jet.Sv)
        norms = np.linalg.norm(cross, axis=-1)
        if np.any(norms <= DEGENERATE_TOL):
            raise DegenerateGeometryError(
                f"face {face_index}: parameterization still degenerate after nudge")

    curvature = mean_curvature_from_jet(jet, face.same_sense)
    normal_local = cross / norms[..., None]
    if not face.same_sense:
        normal_local = -normal_local
    frame = surface.frame_matrix()
    points = surface.origin + jet.S @ frame.T
    normals = normal_local @ frame.T
    normals /= np.linalg.norm(normals, axis=-1, keepdims=True)

    visible = points_in_face(face, np.stack([uu, vv], axis=1))

    rows = np.empty((resolution * resolution, FACE_COLUMNS))
    rows[:, 0:3] = points
    rows[:, 3:6] = normals
    rows[:, 6] = curvature
    rows[:, 7] = visible.astype(float)
    rows[:, 8] = float(face.face_type_code)
    rows[:, 9] = area_ratio
    return FaceTensor(face_index, resolution, resolution, rows)


def sample_edge(model: BrepModel, edge_index: int, count: int,
                length_ratio: float | None = None,
                quadrature: int = 32) -> EdgeTensor:
    """Sample ``count`` parameter-uniform points over the edge interval."""
    if count < 2:
        raise ValueError("count must be >= 2")
    edge = model.edges[edge_index]
    curve = model.curves[edge.curve_index]
    t0, t1 = edge.t_range
    if t1 - t0 <= 0.0:
        raise ValueError(f"edge {edge_index} has a degenerate interval")
    if length_ratio is None:
        lengths = [diffgeo.edge_length(model, i, quadrature).length
                   for i in range(len(model.edges))]
        length_ratio = lengths[edge_index] / max(lengths)

    t = np.linspace(t0, t1, count)
    local_point, local_velocity = diffgeo._local_curve_point_velocity(curve, t)
    speed = np.linalg.norm(local_velocity, axis=-1)
    if np.any(speed <= DEGENERATE_TOL):
        raise DegenerateGeometryError(
            f"edge {edge_index}: curve derivative vanishes at a sample")
    frame = curve.frame_matrix()
    points = curve.origin + local_point @ frame.T
    tangents = (local_velocity / speed[..., None]) @ frame.T
    tangents /= np.linalg.norm(tangents, axis=-1, keepdims=True)

    rows = np.empty((count, EDGE_COLUMNS))
    rows[:, 0:3] = points
    rows[:, 3:6] = tangents
    rows[:, 6] = float(edge.edge_type_code)
    rows[:, 7] = length_ratio
    return EdgeTensor(edge_index, rows)


def sample_model(model: BrepModel, cfg: SamplerConfig = SamplerConfig()) -> SampledModel:
    """Summaries, global extrema, adaptive resolutions, then all tensors.

    Phase 1 (extrema) is a reduction over faces/edges; phase 2 samples each
    entity independently, so the output never depends on evaluation order.
    """
    face_summaries = [diffgeo.face_area(model, i, cfg.face_quadrature)
                      for i in range(len(model.faces))]
    edge_summaries = [diffgeo.edge_length(model, i, cfg.edge_quadrature)
                      for i in range(len(model.edges))]
    areas = [s.area for s in face_summaries]
    lengths = [s.length for s in edge_summaries]
    area_min, area_max = min(areas), max(areas)
    length_min = min(lengths) if lengths else 0.0
    length_max = max(lengths) if lengths else 0.0

    face_tensors = []
    for i, summary in enumerate(face_summaries):
        n = face_resolution(summary.area, area_min, area_max, cfg)
        face_tensors.append(sample_face(model, i, n,
                                        area_ratio=summary.area / area_max))
    edge_tensors = []
    for i, summary in enumerate(edge_summaries):
        m = edge_resolution(summary.length, length_min, length_max, cfg)
        edge_tensors.append(sample_edge(model, i, m,
                                        length_ratio=summary.length / length_max))
    return SampledModel(model, face_tensors, face_summaries, edge_tensors,
                        edge_summaries, area_min, area_max, length_min,
                        length_max)
