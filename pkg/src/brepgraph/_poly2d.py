"""Vectorized 2D polygon primitives for UV-space trimming loops.

Loops are stored as open rings: (m, 2) float arrays whose closing segment
(last vertex back to first) is implicit. All tests below are set-based over
segments, so they are invariant to the choice of starting vertex and to
orientation reversal.
"""

from __future__ import annotations

import numpy as np


def loop_segments(loop: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (starts, ends) arrays of shape (m, 2) including the closing segment."""
    starts = np.asarray(loop, dtype=float)
    ends = np.roll(starts, -1, axis=0)
    return starts, ends


def points_to_segments_distance(points: np.ndarray, starts: np.ndarray,
                                ends: np.ndarray) -> np.ndarray:
    """Min distance from each point to any of the segments.

    points: (n, 2); starts/ends: (m, 2). Returns (n,).
    """
    p = points[:, None, :]            # (n, 1, 2)
    a = starts[None, :, :]            # (1, m, 2)
    d = (ends - starts)[None, :, :]   # (1, m, 2)
    dd = np.einsum("...k,...k->...", d, d)
    t = np.einsum("...k,...k->...", p - a, d) / np.where(dd > 0.0, dd, 1.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * d
    dist = np.linalg.norm(p - closest, axis=-1)
    return dist.min(axis=1)


def crossing_parity(points: np.ndarray, starts: np.ndarray,
                    ends: np.ndarray) -> np.ndarray:
    """Even-odd ray-crossing parity of each point against a segment set.

    Casts a ray in +u; the half-open vertex rule avoids double counting.
    Returns an int array (n,); odd parity means inside.
    """
    u = points[:, 0][:, None]
    v = points[:, 1][:, None]
    v1 = starts[None, :, 1]
    v2 = ends[None, :, 1]
    u1 = starts[None, :, 0]
    u2 = ends[None, :, 0]
    straddles = (v1 > v) != (v2 > v)
    dv = np.where(straddles, v2 - v1, 1.0)
    u_cross = u1 + (v - v1) * (u2 - u1) / dv
    hits = straddles & (u < u_cross)
    return hits.sum(axis=1)


def segment_sets_min_distance(a_starts: np.ndarray, a_ends: np.ndarray,
                              b_starts: np.ndarray, b_ends: np.ndarray) -> float:
    """Minimum distance between two 2D segment sets (0 if any pair crosses)."""
    p1 = a_starts[:, None, :]
    p2 = a_ends[:, None, :]
    p3 = b_starts[None, :, :]
    p4 = b_ends[None, :, :]

    def cross(o, q, r):
        return ((q[..., 0] - o[..., 0]) * (r[..., 1] - o[..., 1])
                - (q[..., 1] - o[..., 1]) * (r[..., 0] - o[..., 0]))

    d1 = cross(p3, p4, p1)
    d2 = cross(p3, p4, p2)
    d3 = cross(p1, p2, p3)
    d4 = cross(p1, p2, p4)
    proper = (d1 * d2 < 0.0) & (d3 * d4 < 0.0)
    if proper.any():
        return 0.0

    dists = [
        points_to_segments_distance(a_starts, b_starts, b_ends),
        points_to_segments_distance(a_ends, b_starts, b_ends),
        points_to_segments_distance(b_starts, a_starts, a_ends),
        points_to_segments_distance(b_ends, a_starts, a_ends),
    ]
    return float(min(d.min() for d in dists))


def loop_bbox(loop: np.ndarray) -> tuple[float, float, float, float]:
    """Tight axis-aligned bounding box (u_min, u_max, v_min, v_max)."""
    arr = np.asarray(loop, dtype=float)
    return (float(arr[:, 0].min()), float(arr[:, 0].max()),
            float(arr[:, 1].min()), float(arr[:, 1].max()))
