import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brepgraph import shapes
from brepgraph.sampler import (
    SamplerConfig,
    edge_resolution,
    face_resolution,
    sample_edge,
    sample_face,
    sample_model,
)
from helpers_geom import rotation_matrix, scale_doc, transform_doc

CFG = SamplerConfig()


class TestResolutionFormula:
    def test_lower_endpoint(self):
        assert face_resolution(2.0, 2.0, 10.0, CFG) == 16

    def test_upper_endpoint(self):
        assert face_resolution(10.0, 2.0, 10.0, CFG) == 32

    def test_midpoint_interpolation(self):
        assert face_resolution(6.0, 2.0, 10.0, CFG) == 24

    def test_equal_extrema_maps_to_max(self):
        assert face_resolution(5.0, 5.0, 5.0, CFG) == 32

    def test_edge_midpoint(self):
        assert edge_resolution(3.0, 1.0, 5.0, CFG) == 24

    def test_rounding_half_away_from_zero(self):
        # 16 + 0.025 * 16 = 16.4 rounds down; 16.5 rounds up
        assert edge_resolution(0.025, 0.0, 1.0, CFG) == 16
        assert edge_resolution(0.03125, 0.0, 1.0, CFG) == 17

    def test_outside_extrema_rejected(self):
        with pytest.raises(ValueError):
            face_resolution(11.0, 2.0, 10.0, CFG)
        with pytest.raises(ValueError):
            edge_resolution(0.5, 1.0, 5.0, CFG)

    @given(st.floats(0.0, 1.0, allow_nan=False))
    def test_always_within_clamp(self, fraction):
        area = 2.0 + fraction * 8.0
        assert 16 <= face_resolution(area, 2.0, 10.0, CFG) <= 32

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    @settings(max_examples=50)
    def test_monotone_in_area(self, f1, f2):
        a1, a2 = sorted([1.0 + f1 * 9.0, 1.0 + f2 * 9.0])
        assert face_resolution(a1, 1.0, 10.0, CFG) <= face_resolution(a2, 1.0, 10.0, CFG)


class TestSampleFace:
    def test_planar_square_grid(self):
        doc = shapes.plate_with_hole()
        doc["faces"][0]["loops"] = [doc["faces"][0]["loops"][0]]
        model = shapes.as_model(doc)
        tensor = sample_face(model, 0, 16)
        assert tensor.rows.shape == (256, 10)
        assert np.all(tensor.rows[:, 7] == 1.0)   # V
        assert np.all(tensor.rows[:, 6] == 0.0)   # H
        assert np.allclose(tensor.rows[:, 3:6], [0.0, 0.0, 1.0], atol=1e-15)
        assert np.all(tensor.rows[:, 8] == 0.0)   # t = plane
        assert np.all(tensor.rows[:, 9] == 1.0)   # only face, so a = 1

    def test_row_order_v_fastest(self):
        doc = shapes.plate_with_hole()
        doc["faces"][0]["loops"] = [doc["faces"][0]["loops"][0]]
        model = shapes.as_model(doc)
        tensor = sample_face(model, 0, 16)
        assert np.allclose(tensor.rows[0, 0:3], [0.0, 0.0, 0.0], atol=1e-15)
        assert np.allclose(tensor.rows[1, 0:3], [0.0, 1 / 15, 0.0], atol=1e-15)
        assert np.allclose(tensor.rows[16, 0:3], [1 / 15, 0.0, 0.0], atol=1e-15)

    def test_masked_fraction_matches_hole_area(self, plate):
        tensor = sample_face(plate, 0, 32)
        hidden = float(np.mean(tensor.rows[:, 7] == 0.0))
        assert abs(hidden - 0.25) <= 0.05

    def test_masked_rows_keep_surface_attributes(self, plate):
        tensor = sample_face(plate, 0, 32)
        hidden = tensor.rows[tensor.rows[:, 7] == 0.0]
        assert hidden.shape[0] > 0
        assert np.all(np.isfinite(hidden))
        assert np.allclose(hidden[:, 3:6], [0.0, 0.0, 1.0], atol=1e-15)

    def test_sphere_pole_rows_nudged(self, sphere):
        tensor = sample_face(sphere, 0, 17)
        assert np.all(np.isfinite(tensor.rows))
        norms = np.linalg.norm(tensor.rows[:, 3:6], axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-9)
        # poles map near (0, 0, +-r) after the inward nudge
        assert tensor.rows[:, 2].max() == pytest.approx(1.0, abs=1e-6)

    def test_too_coarse_rejected(self, sphere):
        with pytest.raises(ValueError):
            sample_face(sphere, 0, 1)


class TestSampleEdge:
    def test_line_parameter_uniform(self, cube):
        tensor = sample_edge(cube, 0, 16)
        assert tensor.rows.shape == (16, 8)
        assert np.allclose(tensor.rows[:, 0], np.arange(16) / 15, atol=1e-15)
        assert np.allclose(tensor.rows[:, 3:6], [1.0, 0.0, 0.0], atol=1e-15)
        assert np.all(tensor.rows[:, 6] == 0.0)  # c = line

    def test_circle_points_on_circle(self, cylinder):
        tensor = sample_edge(cylinder, 0, 32)
        radii = np.linalg.norm(tensor.rows[:, 0:2], axis=1)
        assert np.all(np.abs(radii - 1.0) <= 1e-12)
        assert np.all(tensor.rows[:, 6] == 1.0)  # c = circle_arc

    def test_tangent_norms(self, cylinder):
        tensor = sample_edge(cylinder, 0, 20)
        norms = np.linalg.norm(tensor.rows[:, 3:6], axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-9)


class TestSampleModel:
    def test_cube_equal_extrema_convention(self, cube):
        sampled = sample_model(cube)
        assert len(sampled.faces) == 6
        assert len(sampled.edges) == 12
        assert all(t.resolution == 32 for t in sampled.faces)
        assert all(t.count == 32 for t in sampled.edges)
        for t in sampled.faces:
            assert np.all(t.rows[:, 9] == 1.0)
        for t in sampled.edges:
            assert np.all(t.rows[:, 7] == 1.0)

    def test_area_endpoints_hit_bounds(self):
        doc = {"name": "two-rects",
               "surfaces": [
                   {"kind": "plane", "origin": [0, 0, 0], "x_axis": [1, 0, 0],
                    "y_axis": [0, 1, 0], "params": {}, "u_range": [0, 1],
                    "v_range": [0, 1]},
                   {"kind": "plane", "origin": [0, 0, 2], "x_axis": [1, 0, 0],
                    "y_axis": [0, 1, 0], "params": {}, "u_range": [0, 1],
                    "v_range": [0, 3]},
               ],
               "curves": [],
               "faces": [{"surface": 0}, {"surface": 1}],
               "edges": []}
        sampled = sample_model(shapes.as_model(doc))
        assert [t.resolution for t in sampled.faces] == [16, 32]
        assert np.all(sampled.faces[1].rows[:, 9] == 1.0)
        assert np.allclose(sampled.faces[0].rows[:, 9], 1.0 / 3.0, atol=1e-9)

    def test_resolutions_clamped_on_random_models(self, rng):
        for _ in range(10):
            model = shapes.as_model(shapes.random_model(rng))
            sampled = sample_model(model)
            for t in sampled.faces:
                assert 16 <= t.resolution <= 32
            for t in sampled.edges:
                assert 16 <= t.count <= 32


class TestEquivariance:
    @pytest.mark.parametrize("builder", [shapes.closed_cylinder,
                                         shapes.torus_model,
                                         shapes.bezier_dome,
                                         shapes.unit_cube])
    def test_rigid_motion(self, builder):
        doc = builder()
        rot = rotation_matrix([1.0, 2.0, 0.5], 0.83)
        shift = np.array([3.0, -1.0, 2.5])
        moved = transform_doc(doc, rot, shift)
        base = sample_model(shapes.as_model(doc))
        transformed = sample_model(shapes.as_model(moved))
        for t0, t1 in zip(base.faces, transformed.faces):
            assert t0.resolution == t1.resolution
            # frame-independent columns are bit-identical
            assert np.array_equal(t0.rows[:, 6:10], t1.rows[:, 6:10])
            assert np.allclose(t1.rows[:, 0:3], t0.rows[:, 0:3] @ rot.T + shift,
                               atol=1e-9)
            assert np.allclose(t1.rows[:, 3:6], t0.rows[:, 3:6] @ rot.T,
                               atol=1e-9)
        for e0, e1 in zip(base.edges, transformed.edges):
            assert e0.count == e1.count
            assert np.array_equal(e0.rows[:, 6:8], e1.rows[:, 6:8])
            assert np.allclose(e1.rows[:, 0:3], e0.rows[:, 0:3] @ rot.T + shift,
                               atol=1e-9)
            assert np.allclose(e1.rows[:, 3:6], e0.rows[:, 3:6] @ rot.T,
                               atol=1e-9)

    @pytest.mark.parametrize("builder", [shapes.closed_cylinder,
                                         shapes.torus_model,
                                         shapes.unit_cube])
    def test_uniform_scale(self, builder):
        doc = builder()
        scaled_doc = scale_doc(doc, 2.0)
        base = sample_model(shapes.as_model(doc))
        scaled = sample_model(shapes.as_model(scaled_doc))
        for t0, t1 in zip(base.faces, scaled.faces):
            assert t0.resolution == t1.resolution
            assert np.array_equal(t0.rows[:, 9], t1.rows[:, 9])          # a
            assert np.max(np.abs(t1.rows[:, 6] - t0.rows[:, 6] / 2.0)) <= 1e-9  # H
        for e0, e1 in zip(base.edges, scaled.edges):
            assert e0.count == e1.count
            assert np.array_equal(e0.rows[:, 7], e1.rows[:, 7])          # b
