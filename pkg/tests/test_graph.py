import copy

import numpy as np

from brepgraph import shapes
from brepgraph.graph import adjacency_stats, build_graph
from brepgraph.sampler import SamplerConfig, sample_model

FAST = SamplerConfig(face_quadrature=8, edge_quadrature=8)


def graph_of(doc):
    return build_graph(sample_model(shapes.as_model(doc), FAST))


def connected_components(graph) -> int:
    parent = list(range(graph.node_count))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for arc in graph.arcs:
        ra, rb = find(arc.node_i), find(arc.node_j)
        if ra != rb:
            parent[ra] = rb
    return len({find(i) for i in range(graph.node_count)})


class TestBuildGraph:
    def test_cube(self):
        graph = graph_of(shapes.unit_cube())
        stats = adjacency_stats(graph)
        assert stats.node_count == 6
        assert stats.arc_count == 12
        assert stats.degree_histogram == {4: 6}
        assert stats.seam_count == 0

    def test_cylinder_seam_skipped(self):
        graph = graph_of(shapes.closed_cylinder())
        stats = adjacency_stats(graph)
        assert stats.node_count == 3
        assert stats.arc_count == 2
        assert stats.seam_count == 1
        assert stats.degree_histogram == {1: 2, 2: 1}
        assert stats.isolated_count == 0

    def test_two_disjoint_cubes(self):
        graph = graph_of(shapes.two_cubes())
        stats = adjacency_stats(graph)
        assert stats.node_count == 12
        assert stats.arc_count == 24
        assert connected_components(graph) == 2

    def test_single_face_model(self):
        graph = graph_of(shapes.sphere_model())
        stats = adjacency_stats(graph)
        assert stats.node_count == 1
        assert stats.arc_count == 0
        assert stats.isolated_count == 1

    def test_arc_count_bounded_by_edge_count(self, rng):
        for _ in range(8):
            doc = shapes.random_model(rng)
            graph = graph_of(doc)
            seams = sum(1 for e in doc["edges"] if e["faces"][0] == e["faces"][1])
            assert len(graph.arcs) == len(doc["edges"]) - seams


class TestPermutation:
    def test_relabeling_is_isomorphic(self):
        doc = shapes.unit_cube()
        perm = [3, 0, 5, 1, 4, 2]          # new index k holds old face perm[k]
        inverse = [perm.index(i) for i in range(6)]
        permuted = copy.deepcopy(doc)
        permuted["faces"] = [doc["faces"][perm[k]] for k in range(6)]
        for edge in permuted["edges"]:
            edge["faces"] = [inverse[i] for i in edge["faces"]]

        base = build_graph(sample_model(shapes.as_model(doc), FAST))
        relabeled = build_graph(sample_model(shapes.as_model(permuted), FAST))

        for k in range(6):
            assert np.array_equal(relabeled.nodes[k].rows,
                                  base.nodes[perm[k]].rows)
        base_arcs = {frozenset((a.node_i, a.node_j)) for a in base.arcs}
        mapped = {frozenset((perm[a.node_i], perm[a.node_j]))
                  for a in relabeled.arcs}
        assert mapped == base_arcs
        for a_new, a_old in zip(relabeled.arcs, base.arcs):
            assert np.array_equal(a_new.tensor.rows, a_old.tensor.rows)
