"""Closed-form recoveries: private data read directly off the gradients.

No optimization anywhere in this script. Ratios of first-layer gradient
rows reproduce each node's input exactly; stacking them solves for the
normalized adjacency; and for the graph task a short pseudoinverse chain
recovers the structure whenever the feature matrix has full row rank.
"""
import numpy as np

from glg import (
    Graph,
    infer_label,
    init_params,
    leak,
    make_rng,
    normalize_adjacency,
    recover_adjacency_graph_sage,
    recover_agg_features,
    recover_both_sage,
    recover_target_features,
    synthetic_graph,
)

rng = make_rng(1)

# --- node task: per-node gradients of an 8-node subgraph leak everything ---
g = synthetic_graph(rng, 8, 3, 12, num_classes=4)   # D=12 >= N=8: full row rank
params = init_params(rng, "sage", "node", 12, 64, 4)
anorm = normalize_adjacency(g, "sage-mean").matrix
record = leak(params, g, "node2")

print("per-node recoveries from a GraphSAGE node classifier:")
worst_x = worst_agg = 0.0
labels_ok = True
for i, bundle in enumerate(record.bundles):
    x_i = recover_target_features(bundle)
    agg_i = recover_agg_features(bundle, "sage")
    worst_x = max(worst_x, np.abs(x_i - g.features[i]).max())
    worst_agg = max(worst_agg, np.abs(agg_i - (anorm @ g.features)[i]).max())
    labels_ok &= infer_label(bundle) == g.labels[i]
print(f"  feature error (entrywise max over all nodes): {worst_x:.2e}")
print(f"  aggregated-input error:                       {worst_agg:.2e}")
print(f"  all labels inferred correctly:                {labels_ok}")

x_rec, adj_rec = recover_both_sage(record.bundles)
print(f"  joint recovery: X error {np.abs(x_rec - g.features).max():.2e}, "
      f"structure error {np.abs(adj_rec.matrix - anorm).max():.2e}")

# --- graph task: one graph-level gradient plus known features ---
g2 = synthetic_graph(rng, 6, 3, 10)
g2 = Graph(adjacency=g2.adjacency, features=g2.features, graph_label=2)
gparams = init_params(rng, "sage", "graph", 10, 12, 4, num_nodes=6)
grecord = leak(gparams, g2, "graph")
rec = recover_adjacency_graph_sage(grecord.bundle, g2.features)
truth = normalize_adjacency(g2, "sage-mean").matrix
print("\ngraph classifier, structure from one bundle + known features:")
print(f"  structure error: {np.abs(rec.matrix - truth).max():.2e} "
      f"(warning: {rec.warning})")

# the same chain on rank-deficient features degrades, and says so
low = synthetic_graph(rng, 10, 3, 4)                # D=4 < N=10
low = Graph(adjacency=low.adjacency, features=low.features, graph_label=0)
lparams = init_params(rng, "sage", "graph", 4, 12, 2, num_nodes=10)
lrec = recover_adjacency_graph_sage(leak(lparams, low, "graph").bundle,
                                    low.features)
print(f"  rank-deficient features: residual {lrec.residual:.2f}, "
      f"warning: {lrec.warning}")
