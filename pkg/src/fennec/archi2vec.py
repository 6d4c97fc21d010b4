"""Architecture graphs and their fixed-length embeddings.

A model's runtime structure is a directed acyclic attributed graph whose
node attributes come from a closed 37-atom vocabulary of gradient-node
type names (anything else is mapped to the sentinel ``UNKNOWN``). Each
graph is turned into a bag of Weisfeiler-Lehman subtree tokens and the
bags are embedded like documents: a skip-gram model with negative
sampling learns one vector per distinct token bag. Embeddings are
clustered with seeded k-means to bucket similar architectures.

Graphs are built from outputs back to inputs, so WL neighborhoods follow
in-edges (data-flow predecessors). Training is single-threaded on
purpose: embeddings must be bit-identical for a given seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import derive_seed

__all__ = [
    "ATOM_VOCABULARY",
    "UNKNOWN_ATOM",
    "ArchGraph",
    "GraphEmbedding",
    "load_graph",
    "save_graph",
    "wl_relabel",
    "train_graph_embeddings",
    "cluster_architectures",
    "lloyd_kmeans",
    "cosine_similarity",
]

logger = logging.getLogger(__name__)

UNKNOWN_ATOM = "UNKNOWN"

# The closed vocabulary of gradient-node type names used as node attributes.
ATOM_VOCABULARY = (
    "AdaptiveAvgPool2DBackward0",
    "AdaptiveMaxPool2DBackward0",
    "AddBackward0",
    "AddmmBackward0",
    "AvgPool2DBackward0",
    "AvgPool3DBackward0",
    "CatBackward0",
    "CloneBackward0",
    "ConstantPadNdBackward0",
    "ConvolutionBackward0",
    "DivBackward0",
    "ExpandBackward0",
    "HardtanhBackward0",
    "IndexSelectBackward0",
    "MaxBackward0",
    "MaxPool2DWithIndicesBackward0",
    "MeanBackward1",
    "MulBackward0",
    "NativeBatchNormBackward0",
    "Variable",
    "PowBackward0",
    "PreluBackward0",
    "ReluBackward0",
    "RepeatBackward0",
    "ReshapeAliasBackward0",
    "SigmoidBackward0",
    "SliceBackward0",
    "SoftmaxBackward0",
    "SplitWithSizesBackward0",
    "SqueezeBackward1",
    "SumBackward1",
    "TBackward0",
    "TransposeBackward0",
    "UnsqueezeBackward0",
    "UpsampleBilinear2DBackward1",
    "UpsampleNearest2DBackward1",
    "ViewBackward0",
)

_ATOM_SET = frozenset(ATOM_VOCABULARY)


def _token_hash(text: str) -> str:
    """Stable 64-bit hash of a token string, as hex."""
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


@dataclass(frozen=True)
class ArchGraph:
    """Directed acyclic attributed graph of one model's runtime structure."""

    graph_id: str
    nodes: tuple[tuple[int, str], ...]          # (node_id, atom)
    edges: tuple[tuple[int, int], ...]          # (src, dst)
    unknown_atoms: tuple[str, ...] = ()

    def __post_init__(self):
        node_ids = [nid for nid, _ in self.nodes]
        if len(set(node_ids)) != len(node_ids):
            raise ValueError(f"graph {self.graph_id}: duplicate node ids")
        id_set = set(node_ids)

        unknown = []
        nodes = []
        for nid, atom in self.nodes:
            if atom not in _ATOM_SET:
                unknown.append(atom)
                atom = UNKNOWN_ATOM
            nodes.append((int(nid), atom))

        seen = set()
        for src, dst in self.edges:
            if src == dst:
                raise ValueError(f"graph {self.graph_id}: self-loop on node {src}")
            if (src, dst) in seen:
                raise ValueError(f"graph {self.graph_id}: duplicate edge ({src}, {dst})")
            if src not in id_set or dst not in id_set:
                raise ValueError(f"graph {self.graph_id}: edge ({src}, {dst}) references unknown node")
            seen.add((src, dst))

        object.__setattr__(self, "nodes", tuple(nodes))
        object.__setattr__(self, "edges", tuple((int(s), int(d)) for s, d in self.edges))
        object.__setattr__(self, "unknown_atoms", tuple(unknown))
        self._check_acyclic()

    def _check_acyclic(self):
        out_edges: dict[int, list[int]] = {nid: [] for nid, _ in self.nodes}
        indegree = {nid: 0 for nid, _ in self.nodes}
        for src, dst in self.edges:
            out_edges[src].append(dst)
            indegree[dst] += 1
        queue = [nid for nid, deg in indegree.items() if deg == 0]
        visited = 0
        while queue:
            nid = queue.pop()
            visited += 1
            for nxt in out_edges[nid]:
                indegree[nxt] -= 1
                if indegree[nxt] == 0:
                    queue.append(nxt)
        if visited != len(self.nodes):
            raise ValueError(f"graph {self.graph_id}: graph contains a cycle")

    def in_neighbors(self) -> dict[int, list[int]]:
        nbrs: dict[int, list[int]] = {nid: [] for nid, _ in self.nodes}
        for src, dst in self.edges:
            nbrs[dst].append(src)
        return nbrs

    def atom_counts(self) -> Counter:
        return Counter(atom for _, atom in self.nodes)


@dataclass(frozen=True)
class GraphEmbedding:
    graph_id: str
    vector: np.ndarray
    wl_iterations: int
    vocab_hash: str

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=float)
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"embedding for {self.graph_id} has non-finite entries")
        vec = np.ascontiguousarray(vec)
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)


def load_graph(path: str | Path) -> ArchGraph:
    """Load a graph JSON file, mapping unrecognized atoms to UNKNOWN."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    graph = ArchGraph(
        graph_id=doc["graph_id"],
        nodes=tuple((int(n["id"]), n["atom"]) for n in doc["nodes"]),
        edges=tuple((int(e[0]), int(e[1])) for e in doc["edges"]),
    )
    if graph.unknown_atoms:
        logger.warning(
            "graph %s: %d node(s) with unrecognized atoms mapped to %s: %s",
            graph.graph_id,
            len(graph.unknown_atoms),
            UNKNOWN_ATOM,
            sorted(set(graph.unknown_atoms)),
        )
    return graph


def save_graph(graph: ArchGraph, path: str | Path) -> None:
    doc = {
        "graph_id": graph.graph_id,
        "nodes": [{"id": nid, "atom": atom} for nid, atom in graph.nodes],
        "edges": [[src, dst] for src, dst in graph.edges],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Weisfeiler-Lehman subtree tokens
# ---------------------------------------------------------------------------

def wl_relabel(graph: ArchGraph, iterations: int) -> list[str]:
    """Subtree tokens of all nodes over WL iterations 0..iterations.

    Iteration 0 emits each node's atom. Iteration t hashes a node's
    previous token together with the sorted multiset of its in-neighbors'
    previous tokens, so the result is invariant to node-id permutation.
    The returned list is the union multiset over all iterations, sorted.
    """
    nbrs = graph.in_neighbors()
    current = {nid: atom for nid, atom in graph.nodes}
    tokens = list(current.values())
    for _ in range(iterations):
        nxt = {}
        for nid in current:
            neighborhood = ",".join(sorted(current[v] for v in nbrs[nid]))
            nxt[nid] = _token_hash(current[nid] + "|" + neighborhood)
        current = nxt
        tokens.extend(current.values())
    return sorted(tokens)


# ---------------------------------------------------------------------------
# Skip-gram training over (graph document, token) pairs
# ---------------------------------------------------------------------------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


def train_graph_embeddings(
    graphs: "list[ArchGraph]",
    d_emb: int = 64,
    wl_iterations: int = 2,
    epochs: int = 100,
    seed: int = 0,
    negative: int = 5,
    learning_rate: float = 0.025,
    min_learning_rate: float = 1e-4,
    batch_size: int = 32,
) -> list[GraphEmbedding]:
    """Embed each graph's WL-token document with skip-gram negative sampling.

    Documents are deduplicated by token multiset before training, so
    graphs with identical (or isomorphic) structure share one trained
    vector exactly. Token order inside documents, document order, and all
    sampling are derived from the token content and the seed alone:
    outputs are bit-identical across runs. Returned vectors have unit norm.

    Batches are kept small because updates within one batch are applied
    at stale values; with few distinct documents a large batch multiplies
    the effective step size and destabilizes training.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    if len(graphs) < 2:
        raise ValueError("need at least 2 graphs to train embeddings")
    if d_emb < 2:
        raise ValueError("d_emb must be >= 2")

    docs = {g.graph_id: wl_relabel(g, wl_iterations) for g in graphs}
    doc_keys = sorted(set(tuple(tokens) for tokens in docs.values()))
    key_index = {key: i for i, key in enumerate(doc_keys)}

    vocab = sorted(set(t for key in doc_keys for t in key))
    vocab_index = {t: i for i, t in enumerate(vocab)}
    vocab_hash = hashlib.blake2b("\n".join(vocab).encode("utf-8"), digest_size=16).hexdigest()

    pair_docs = []
    pair_tokens = []
    token_counts = np.zeros(len(vocab))
    for key, di in key_index.items():
        for t in key:
            pair_docs.append(di)
            pair_tokens.append(vocab_index[t])
            token_counts[vocab_index[t]] += 1
    pair_docs = np.array(pair_docs, dtype=np.int64)
    pair_tokens = np.array(pair_tokens, dtype=np.int64)
    n_pairs = pair_docs.shape[0]

    noise = token_counts ** 0.75
    noise /= noise.sum()

    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "graph-embedding")))
    bound = 0.5 / d_emb
    doc_vecs = rng.uniform(-bound, bound, size=(len(doc_keys), d_emb))
    tok_vecs = rng.uniform(-bound, bound, size=(len(vocab), d_emb))

    total_steps = max(1, epochs * n_pairs)
    step = 0
    for _ in range(epochs):
        order = rng.permutation(n_pairs)
        for start in range(0, n_pairs, batch_size):
            batch = order[start:start + batch_size]
            lr = max(min_learning_rate, learning_rate * (1.0 - step / total_steps))
            step += batch.shape[0]

            di = pair_docs[batch]
            ti = pair_tokens[batch]
            ni = rng.choice(len(vocab), size=(batch.shape[0], negative), p=noise)

            g = doc_vecs[di]                                   # (B, d)
            w = tok_vecs[ti]                                   # (B, d)
            wn = tok_vecs[ni]                                  # (B, neg, d)

            pos_err = _sigmoid(np.sum(g * w, axis=1)) - 1.0    # (B,)
            neg_err = _sigmoid(np.einsum("bd,bnd->bn", g, wn))  # (B, neg)

            grad_doc = pos_err[:, None] * w + np.einsum("bn,bnd->bd", neg_err, wn)
            grad_tok = pos_err[:, None] * g
            grad_neg = neg_err[:, :, None] * g[:, None, :]

            np.add.at(doc_vecs, di, -lr * grad_doc)
            np.add.at(tok_vecs, ti, -lr * grad_tok)
            np.add.at(tok_vecs, ni.ravel(), -lr * grad_neg.reshape(-1, d_emb))

    norms = np.linalg.norm(doc_vecs, axis=1, keepdims=True)
    unit = doc_vecs / np.where(norms > 0, norms, 1.0)

    return [
        GraphEmbedding(
            graph_id=g.graph_id,
            vector=unit[key_index[tuple(docs[g.graph_id])]].copy(),
            wl_iterations=wl_iterations,
            vocab_hash=vocab_hash,
        )
        for g in graphs
    ]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        return 0.0
    return float(np.clip(a @ b / denom, -1.0, 1.0))


# ---------------------------------------------------------------------------
# Seeded k-means over embeddings
# ---------------------------------------------------------------------------

def lloyd_kmeans(points: np.ndarray, k: int, seed: int, max_iters: int = 100):
    """Seeded k-means++ initialization followed by Lloyd iterations.

    Returns (centers, assignment, within-cluster sum of squares). Empty
    clusters are re-seeded with the point farthest from its own center,
    first index winning ties, so runs are reproducible.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if k < 1:
        raise ValueError("num_clusters must be >= 1")
    if k > n:
        raise ValueError(f"num_clusters={k} exceeds number of points {n}")

    rng = np.random.Generator(np.random.PCG64(seed))
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[j] = points[rng.integers(n)]
            continue
        centers[j] = points[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, np.sum((points - centers[j]) ** 2, axis=1))

    assignment = np.zeros(n, dtype=int)
    for _ in range(max_iters):
        dists = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_assignment = np.argmin(dists, axis=1)
        for j in range(k):
            members = points[new_assignment == j]
            if members.shape[0]:
                centers[j] = members.mean(axis=0)
            else:
                worst = int(np.argmax(dists[np.arange(n), new_assignment]))
                centers[j] = points[worst]
                new_assignment[worst] = j
        if np.array_equal(new_assignment, assignment):
            assignment = new_assignment
            break
        assignment = new_assignment

    inertia = float(np.sum((points - centers[assignment]) ** 2))
    return centers, assignment, inertia


def cluster_architectures(
    embeddings: "list[GraphEmbedding]", num_clusters: int, seed: int
) -> dict[str, int]:
    """Cluster graph embeddings; returns graph_id -> cluster_id.

    Embeddings are ordered by graph_id before clustering so the result
    does not depend on caller ordering.
    """
    ordered = sorted(embeddings, key=lambda e: e.graph_id)
    points = np.vstack([e.vector for e in ordered])
    _, assignment, _ = lloyd_kmeans(points, num_clusters, seed)
    return {e.graph_id: int(c) for e, c in zip(ordered, assignment)}
