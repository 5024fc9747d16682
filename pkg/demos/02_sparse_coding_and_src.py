"""Code a query against a set of systems and classify by class-wise
reconstruction error."""
import numpy as np

from ldsdict import (
    CodingProblem,
    kernel_matrix,
    kernel_vector,
    nn_martin_classify,
    reconstruction_error,
    solve_kernel_lasso,
    src_classify,
)
from ldsdict.experiment import ExperimentConfig, fit_all
from ldsdict.synthetic import SyntheticConfig, make_dataset

syn = SyntheticConfig(n_classes=3, n_train=8, n_test=4, seed=3)
train, test, _ = make_dataset(syn)
cfg = ExperimentConfig(n=4)
train_models, train_tf = fit_all(train, cfg)
test_models, test_tf = fit_all(test, cfg)
labels = [s.label for s in train]

# Coding one query against all training systems (symmetric parts)
q = test_tf[0]
k_mat = kernel_matrix(train_tf, part="sym")
k_vec = kernel_vector(q, train_tf, part="sym")
code = solve_kernel_lasso(CodingProblem(k_mat, k_vec, sparsity=0.1))
print(f"{code.iterations} sweeps, objective {code.objective:.4f}")
print("nonzero code entries:", np.flatnonzero(np.abs(code.z) > 1e-10))
print("objective per sweep:", np.round(code.history[:6], 4))
print("reconstruction error:", round(reconstruction_error(code.z, k_mat, k_vec, q.sym_canon.n), 4))

# Class-restricted coding on both parts
res = src_classify(q, train_tf, labels)
print("per-class errors:", np.round(res.errors, 4), "-> label", res.label, "truth", test[0].label)

hits_src = sum(src_classify(t, train_tf, labels).label == s.label for t, s in zip(test_tf, test))
hits_nn = sum(nn_martin_classify(m, train_models, labels) == s.label for m, s in zip(test_models, test))
print(f"SRC accuracy {hits_src / len(test):.3f}, NN-Martin accuracy {hits_nn / len(test):.3f}")
