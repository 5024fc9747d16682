"""Learn a two-fold dictionary and watch the objective fall."""
import numpy as np

from ldsdict import DlConfig, dl_objective, encode, learn, random_init
from ldsdict.experiment import ExperimentConfig, fit_all
from ldsdict.synthetic import SyntheticConfig, make_dataset

train, _, _ = make_dataset(SyntheticConfig(n_classes=4, n_train=5, n_test=0, seed=1))
_, data = fit_all(train, ExperimentConfig(n=4))

cfg = DlConfig(j=4, max_outer_iters=8, check_monotone=True)
d, codes, trace = learn(data, cfg)

print("objective per outer iteration:")
for i, v in enumerate(trace.objective_per_iter):
    print(f"  {i:2d}  {v:.6f}")
print("atom change per iteration:", np.round(trace.atom_change_norms, 4))
print("converged:", trace.converged, trace.diagnostic or "")

# learned atoms keep orthonormal bases and eigenvalues inside the unit disc
for r, atom in enumerate(d.sym_atoms):
    print(f"sym atom {r}: lambda = {np.round(atom.lam, 3)}")
for r, atom in enumerate(d.skew_atoms):
    print(f"skew atom {r}: theta = {np.round(atom.theta, 3)}")

# compare with atoms copied from random data
base = random_init(data, cfg)
base_codes = encode(data, base, cfg.sparsity)
print("reconstruction loss, random atoms :", round(dl_objective(data, base, base_codes), 4))
print("reconstruction loss, learned atoms:", round(dl_objective(data, d, codes), 4))
