# Three solvers on one graph: eigendecomposition, forward-backward with QR
# retraction, and mini-batch SGD on the Cholesky objective.
#
# Run: python demos/03_solver_convergence.py

# %%
from cholspectral import SgdConfig, embed_eigen, embed_fb_qr, embed_sgd_cholesky, laplacian
from cholspectral.synthetic import multilayer_synthetic

graphs, truth = multilayer_synthetic(1, 100, 5, seed=0)
graph = graphs[0]
L = laplacian(graph)
_, eig = embed_eigen(L, 5, return_report=True)
opt = eig.objective
print(f"N={graph.n_vertices}, |E|={graph.n_edges}, optimum (sum of 5 smallest eigenvalues) = {opt:.5f}")

# %%
# Forward-backward uses every edge at every step and the default step 1/||L||.
_, fb = embed_fb_qr(L, 5, steps=3000)
print(f"fb_qr      3000 steps: rel. gap {(fb.objective - opt) / opt:.2e}  ({fb.seconds:.2f}s)")

# %%
# SGD samples 200 of the ~1600 edges per step and touches only their rows.
for iters in (5_000, 15_000, 30_000):
    _, rep = embed_sgd_cholesky(graph, 5, SgdConfig(gamma=1e-3, batch_size=200, iterations=iters))
    print(f"sgd  {iters:6d} steps, B=200: rel. gap {(rep.objective - opt) / opt:.4f}  ({rep.seconds:.2f}s)")

# With a constant step the iterate settles into a noise band around the
# optimum. A larger gamma gets there sooner but the band is wider; a smaller
# gamma narrows the band but needs more than 30000 steps to reach it.
for gamma in (2e-3, 5e-4):
    _, rep = embed_sgd_cholesky(graph, 5, SgdConfig(gamma=gamma, batch_size=200, iterations=30_000))
    print(f"sgd gamma={gamma:g}: rel. gap {(rep.objective - opt) / opt:.4f}")

# %%
# The plain update U <- U - gamma * 2 L_t U M^-1 has a scale problem: each step
# shrinks U, M = U^T U follows, and M^-1 grows, so the effective step keeps
# increasing until noise dominates. Multiplying by M (the update in the
# frame where U^T U = I) removes the scale dependence.
plain = SgdConfig(gamma=1e-3, batch_size=200, iterations=15_000, precondition=False, unbiased=False)
_, rep = embed_sgd_cholesky(graph, 5, plain)
print(f"plain update, 15000 steps: objective {rep.objective:.3f} vs optimum {opt:.3f}; "
      f"trace tail {[round(v, 3) for _, v in rep.trace[-3:]]}")
