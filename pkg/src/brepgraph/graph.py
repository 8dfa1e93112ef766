"""Face-adjacency graph: faces become nodes, shared topological edges arcs.

Arcs are stored once per topological edge and expanded to two directed arcs
at message-passing time; both directions share the edge tensor. Seam edges
(both incidences on the same face) carry no adjacency information and are
skipped, counted in the stats. Parallel arcs are kept: two faces sharing
several edges get one arc per shared edge.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .sampler import EdgeTensor, FaceTensor, SampledModel


@dataclass
class Arc:
    node_i: int
    node_j: int
    tensor: EdgeTensor


@dataclass
class BrepGraph:
    nodes: list[FaceTensor]        # node order = face order in the model
    arcs: list[Arc]
    seam_count: int = 0

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def directed_arcs(self):
        """Yield (src, dst, tensor) for both directions of every arc."""
        for arc in self.arcs:
            yield arc.node_i, arc.node_j, arc.tensor
            yield arc.node_j, arc.node_i, arc.tensor


@dataclass
class GraphStats:
    node_count: int
    arc_count: int
    degree_histogram: dict[int, int]
    isolated_count: int
    seam_count: int


def build_graph(sampled: SampledModel) -> BrepGraph:
    """One node per face, one arc per edge with two distinct incident faces."""
    n = len(sampled.faces)
    arcs = []
    seams = 0
    for tensor in sampled.edges:
        edge = sampled.model.edges[tensor.edge_index]
        i, j = edge.incident_faces
        if i == j:
            seams += 1
            continue
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge {tensor.edge_index} references missing face")
        arcs.append(Arc(i, j, tensor))
    return BrepGraph(list(sampled.faces), arcs, seams)


def adjacency_stats(graph: BrepGraph) -> GraphStats:
    degrees = Counter({i: 0 for i in range(graph.node_count)})
    for arc in graph.arcs:
        degrees[arc.node_i] += 1
        degrees[arc.node_j] += 1
    histogram = Counter(degrees.values())
    return GraphStats(
        node_count=graph.node_count,
        arc_count=len(graph.arcs),
        degree_histogram=dict(sorted(histogram.items())),
        isolated_count=histogram.get(0, 0),
        seam_count=graph.seam_count,
    )
