# The Cholesky-reformulated objective and its gradient.
#
# J(U) = Tr(Q^T L Q) with Q = U R^-1 and R the Cholesky factor of U^T U. J is
# the ordinary trace objective on the span of U, so any U with full column
# rank is a valid iterate; no orthogonality constraint is needed.
#
# Run: python demos/02_objective_and_gradient.py

# %%
import numpy as np

from cholspectral import embed_eigen, grad_J_full, laplacian, objective_J
from cholspectral.synthetic import gmm_sample, knn_graph

rng = np.random.default_rng(0)
cloud = gmm_sample(10, 3, seed=1)
L = laplacian(knn_graph(cloud.points, 4))
U = rng.standard_normal((30, 3))

# %%
# J only sees the column span: rescaling or mixing columns with an upper
# triangular matrix leaves it unchanged.
T = np.triu(rng.standard_normal((3, 3))) + 3 * np.eye(3)
print("J(U)     =", objective_J(U, L))
print("J(5U)    =", objective_J(5 * U, L))
print("J(U T)   =", objective_J(U @ T, L))

# %%
# The analytic gradient back-propagates through the Cholesky factorization.
# Compare with central finite differences.
h = 1e-5
G = grad_J_full(U, L)
FD = np.zeros_like(U)
for idx in np.ndindex(*U.shape):
    E = np.zeros_like(U)
    E[idx] = h
    FD[idx] = (objective_J(U + E, L) - objective_J(U - E, L)) / (2 * h)
print("max relative error vs finite differences:", np.max(np.abs(G - FD) / np.abs(FD)))

# %%
# At the eigenvector solution the gradient has no component outside span(U).
Q = embed_eigen(L, 3)
G = grad_J_full(Q, L)
print("off-span gradient norm at the optimum:", np.linalg.norm(G - Q @ (Q.T @ G)))
