"""Random instance generators shared by the test modules."""
import numpy as np

from ldsdict import CanonicalAtom, LdsModel, make_two_fold, stabilize_sn
from ldsdict.learning import CodeMatrix, Dictionary
from ldsdict.model import SKEW, SYMMETRIC
from ldsdict.numlin import skew_canonical


def rand_orth(m, n, rng):
    q, _ = np.linalg.qr(rng.standard_normal((m, n)))
    return q


def rand_structured(n, kind, rng, norm_range=(0.1, 0.8)):
    """Random symmetric / skew / general matrix with spectral norm in ``norm_range``."""
    a = rng.standard_normal((n, n))
    if kind == SYMMETRIC:
        a = a + a.T
    elif kind == SKEW:
        a = a - a.T
    nrm = np.linalg.norm(a, 2)
    if nrm < 1e-12:
        return a
    return a * (rng.uniform(*norm_range) / nrm)


def rand_sym_atom(m, n, rng, rmax=0.8):
    return CanonicalAtom(SYMMETRIC, rand_orth(m, n, rng), lam=rng.uniform(-rmax, rmax, n))


def rand_skew_atom(m, n, rng, rmax=0.8):
    a = rand_structured(n, SKEW, rng, (0.05, rmax))
    sc = skew_canonical(a)
    return CanonicalAtom(SKEW, rand_orth(m, n, rng), theta=sc.theta, odd_null=sc.odd_null)


def rand_model(m, n, rng, nv=2, scale=3.0):
    a = rng.standard_normal((n, n)) * scale / np.sqrt(n)
    b = rng.standard_normal((n, nv))
    model = LdsModel(a=a, c=rand_orth(m, n, rng), b=b, ybar=np.zeros(m))
    return stabilize_sn(model)


def rand_two_fold(m, n, rng, nv=2, scale=3.0):
    return make_two_fold(rand_model(m, n, rng, nv, scale))


def dl_instance(rng, n_data=5, j=3, m=6, n=3, nv=2, zero_frac=0.3, scale=3.0):
    """Random data, dictionary and codes (with some exact zeros)."""
    data = [rand_two_fold(m, n, rng, nv, scale) for _ in range(n_data)]
    atoms = [rand_two_fold(m, n, rng, nv, scale) for _ in range(j)]
    d = Dictionary(
        [a.sym_canon for a in atoms], [a.skew_canon for a in atoms], [a.h for a in atoms]
    )

    def codes():
        z = rng.uniform(-1, 1, (j, n_data))
        z[rng.random(z.shape) < zero_frac] = 0.0
        return z

    return data, d, CodeMatrix(codes(), codes())


def truncated_projector(model, order):
    from ldsdict.kernels import truncated_basis

    v = truncated_basis(model, order)
    return v @ v.T
