# Graphs, Laplacians and the edge index set.
#
# Run: python demos/01_graphs_and_laplacians.py

# %%
import numpy as np

from cholspectral import apply_partial_laplacian, build_graph, edge_index_set, laplacian

# A 4-cycle with one heavier edge. Self-loops and zero weights are dropped,
# and a pair listed in both orientations is stored once (i < j).
g = build_graph([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 2.0), (3, 0, 1.0), (0, 0, 5.0), (1, 0, 1.0)])
print(g)
print("edges:", g.edges())
print("degrees:", g.degrees)

# %%
# L = D - W, and its symmetric normalization D^-1/2 L D^-1/2.
L = laplacian(g)
print("L =\n", L.toarray())
print("L @ ones =", L.dot(np.ones(4)))  # rows sum to zero
print("L_sym =\n", np.round(laplacian(g, "sym").toarray(), 3))

# %%
# The edge index set lists each stored edge once; a mini-batch is a set of
# positions into it.
edges = edge_index_set(g)
print("index set:", list(edges))

# Applying only the edges of a batch touches only their endpoints.
U = np.arange(8, dtype=float).reshape(4, 2)
rows, partial = apply_partial_laplacian(g, [2], U)
print("batch {(2,3)} touches rows", rows, "\n", partial)

# Summing over a partition of the edges gives back L U.
total = np.zeros_like(U)
for batch in ([0, 1], [2, 3]):
    r, p = apply_partial_laplacian(g, batch, U)
    total[r] += p
print("partition sum equals L U:", np.allclose(total, L.dot(U)))
