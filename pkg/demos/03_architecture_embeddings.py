"""Embedding architecture graphs and clustering them.

Two residual backbones of different depth share most of their WL subtree
tokens, so their embeddings stay close; a plain convolutional stack lands
far away. K-means then buckets the residual family together.
"""

from collections import Counter

from fennec import cluster_architectures, cosine_similarity, train_graph_embeddings, wl_relabel
from fennec.fixtures import residual_graph, sequential_conv_graph

r18 = residual_graph("resnet18ish", (2, 2, 2, 2))
r10 = residual_graph("resnet10ish", (1, 1, 1, 1))
alex = sequential_conv_graph("plainnet")

for g in (r18, r10, alex):
    atoms = Counter(a for _, a in g.nodes)
    skips = atoms.get("AddBackward0", 0)
    print(f"{g.graph_id}: {len(g.nodes)} nodes, {len(g.edges)} edges, {skips} skip joins")

docs = {g.graph_id: wl_relabel(g, 2) for g in (r18, r10, alex)}
shared_rr = sum((Counter(docs["resnet18ish"]) & Counter(docs["resnet10ish"])).values())
shared_ra = sum((Counter(docs["resnet18ish"]) & Counter(docs["plainnet"])).values())
print(f"\nWL token overlap: resnet18ish/resnet10ish {shared_rr}, resnet18ish/plainnet {shared_ra}")

embeddings = train_graph_embeddings([r18, r10, alex], d_emb=64, wl_iterations=2, epochs=100, seed=0)
vec = {e.graph_id: e.vector for e in embeddings}
print(f"\ncos(resnet18ish, resnet10ish) = {cosine_similarity(vec['resnet18ish'], vec['resnet10ish']):.4f}")
print(f"cos(resnet18ish, plainnet)    = {cosine_similarity(vec['resnet18ish'], vec['plainnet']):.4f}")

clusters = cluster_architectures(embeddings, num_clusters=2, seed=0)
print(f"\nclusters: {clusters}")
