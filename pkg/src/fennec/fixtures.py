"""Deterministic architecture-graph builders for tests and demos.

The residual and plain-convnet builders mimic the runtime graphs of
familiar image backbones at the atom level: residual networks join skip
paths through AddBackward0 nodes, plain stacks never do. These graphs are
structural stand-ins, not extractions from real checkpoints.
"""

from __future__ import annotations

import numpy as np

from .archi2vec import ATOM_VOCABULARY, ArchGraph

__all__ = ["residual_graph", "sequential_conv_graph", "random_dag"]


class _GraphBuilder:
    def __init__(self, graph_id: str):
        self.graph_id = graph_id
        self.nodes: list[tuple[int, str]] = []
        self.edges: list[tuple[int, int]] = []

    def add(self, atom: str, *parents: int) -> int:
        nid = len(self.nodes)
        self.nodes.append((nid, atom))
        for p in parents:
            self.edges.append((p, nid))
        return nid

    def chain(self, start: int, *atoms: str) -> int:
        node = start
        for atom in atoms:
            node = self.add(atom, node)
        return node

    def build(self) -> ArchGraph:
        return ArchGraph(graph_id=self.graph_id, nodes=tuple(self.nodes), edges=tuple(self.edges))


def residual_graph(graph_id: str, blocks_per_stage: tuple[int, ...] = (2, 2, 2, 2)) -> ArchGraph:
    """Residual backbone: per block conv-bn-relu-conv-bn joined with the skip path.

    ``(2, 2, 2, 2)`` gives an 18-layer-style graph, ``(1, 1, 1, 1)`` a
    10-layer-style one. The first block of every stage after the first
    carries a projection (conv-bn) on its skip path.
    """
    g = _GraphBuilder(graph_id)
    x = g.add("Variable")
    x = g.chain(x, "ConvolutionBackward0", "NativeBatchNormBackward0", "ReluBackward0",
                "MaxPool2DWithIndicesBackward0")
    for stage, blocks in enumerate(blocks_per_stage):
        for b in range(blocks):
            main = g.chain(x, "ConvolutionBackward0", "NativeBatchNormBackward0", "ReluBackward0",
                           "ConvolutionBackward0", "NativeBatchNormBackward0")
            if stage > 0 and b == 0:
                skip = g.chain(x, "ConvolutionBackward0", "NativeBatchNormBackward0")
            else:
                skip = x
            x = g.add("AddBackward0", main, skip)
            x = g.add("ReluBackward0", x)
    x = g.chain(x, "AdaptiveAvgPool2DBackward0", "ViewBackward0", "AddmmBackward0")
    return g.build()


def sequential_conv_graph(graph_id: str) -> ArchGraph:
    """Plain convolutional stack with a small dense head, no skip joins."""
    g = _GraphBuilder(graph_id)
    x = g.add("Variable")
    x = g.chain(x, "ConvolutionBackward0", "ReluBackward0", "MaxPool2DWithIndicesBackward0")
    x = g.chain(x, "ConvolutionBackward0", "ReluBackward0", "MaxPool2DWithIndicesBackward0")
    x = g.chain(x, "ConvolutionBackward0", "ReluBackward0")
    x = g.chain(x, "ConvolutionBackward0", "ReluBackward0")
    x = g.chain(x, "ConvolutionBackward0", "ReluBackward0", "MaxPool2DWithIndicesBackward0")
    x = g.chain(x, "AdaptiveAvgPool2DBackward0", "ViewBackward0")
    x = g.chain(x, "AddmmBackward0", "ReluBackward0", "AddmmBackward0", "ReluBackward0", "AddmmBackward0")
    return g.build()


def random_dag(graph_id: str, num_nodes: int, seed: int, edge_prob: float = 0.3) -> ArchGraph:
    """Random DAG over the atom vocabulary; edges respect a topological order."""
    rng = np.random.Generator(np.random.PCG64(seed))
    atoms = rng.choice(len(ATOM_VOCABULARY), size=num_nodes)
    nodes = tuple((i, ATOM_VOCABULARY[a]) for i, a in enumerate(atoms))
    edges = [
        (i, j)
        for i in range(num_nodes)
        for j in range(i + 1, num_nodes)
        if rng.random() < edge_prob
    ]
    return ArchGraph(graph_id=graph_id, nodes=nodes, edges=tuple(edges))
