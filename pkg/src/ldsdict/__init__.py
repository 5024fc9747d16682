"""Linear dynamical systems as subspaces: kernels, sparse coding and dictionary learning."""
from .coding import (
    CodingProblem,
    SparseCode,
    nn_martin_classify,
    reconstruction_error,
    solve_kernel_lasso,
    src_classify,
)
from .errors import *  # noqa: F401,F403
from .kernels import (
    HYBRID,
    PROJECTION,
    RBF_MARTIN,
    FactorL,
    KernelMatrix,
    KernelVector,
    canonical_E,
    canonical_kernel,
    embedding_distance,
    factor,
    gram_cross,
    hybrid_kernel,
    kernel_matrix,
    kernel_vector,
    martin_distance,
    principal_angles,
    projection_kernel,
    rbf_martin_kernel,
    truncated_kernel,
)
from .learning import (
    CodeMatrix,
    Dictionary,
    DlConfig,
    LearningTrace,
    compute_S,
    dl_objective,
    encode,
    kmeans_init,
    learn,
    random_init,
    update_covariance_atom,
    update_skew_columns,
    update_skew_pair,
    update_sym_column,
    update_sym_lambda,
)
from .model import (
    SKEW,
    SYMMETRIC,
    CanonicalAtom,
    LdsModel,
    Sequence,
    TwoFoldLds,
    canonicalize,
    identify,
    make_two_fold,
    simulate,
    stabilize_sn,
)
from .numlin import (
    orthonormal_complement,
    skew_canonical,
    soft_threshold,
    solve_discrete_sylvester,
    sym_eig,
)

__version__ = "0.1.0"
