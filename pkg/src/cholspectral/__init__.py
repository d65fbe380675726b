"""Scalable spectral embedding by mini-batch SGD on a Cholesky-reformulated objective."""

from .clustering import KMeansConfig, evaluate, kmeans, nmi, purity, rand_index
from .exceptions import (
    CholSpectralError,
    ConfigError,
    ConvergenceError,
    GraphError,
    ParseError,
    RankDeficiencyError,
)
from .graph_core import (
    EdgeIndexView,
    LaplacianOperator,
    SparseGraph,
    apply_partial_laplacian,
    build_graph,
    edge_index_set,
    laplacian,
    read_edge_list,
    write_edge_list,
)
from .linalg import cholesky_upper, grad_J_full, objective_J, orthogonalize, qr_semi_orthogonal
from .multilayer import (
    AggregatedOperator,
    LayerBundle,
    aggregate,
    grassmann_proj_distance_sq,
    make_bundle,
    multilayer_distance,
    solve_multilayer,
    union_graph,
)
from .report import SolverReport
from .sgd import SgdConfig, SgdState, embed_sgd_cholesky, gram_update, sample_minibatch, sgd_step
from .solvers import FbConfig, embed_eigen, embed_fb_qr
from .synthetic import gmm_sample, knn_graph, multilayer_synthetic

__version__ = "0.1.0"
