"""Learning a two-fold LDS dictionary by alternating coding and atom updates.

Each family (symmetric, skew) is a separate reconstruction problem that shares
only the optional covariance factors. With codes fixed, the part of a family's
objective that depends on atom r is ``2 * sum_k u_k^* S_k(lam_k) u_k`` where
``S_k`` is built from the other atoms and the data. Basis columns are then
found by small eigenproblems and eigenvalues by 1-D descent in a
reparameterization that keeps them inside (-1, 1).

Internally everything operates on one family at a time: a list of atoms, a
list of data parts (both ``CanonicalAtom``) and a J x N code matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .coding import DEFAULT_SPARSITY, CodingProblem, solve_kernel_lasso
from .errors import (
    ComplexResidue,
    DimensionMismatch,
    MissingCovariance,
    ObjectiveIncrease,
    TooFewSequences,
)
from .kernels import _E, canonical_kernel
from .model import DEFAULT_SN_SCALE, SKEW, SN_CEILING, SYMMETRIC, CanonicalAtom
from .numlin import orthonormal_complement, sign_normalize_columns

log = logging.getLogger(__name__)

__all__ = [
    "KMEANS",
    "RANDOM",
    "AtomPair",
    "Dictionary",
    "DlConfig",
    "LearningTrace",
    "CodeMatrix",
    "dl_objective",
    "penalized_objective",
    "encode",
    "compute_S",
    "skew_pair_S",
    "update_sym_column",
    "update_skew_columns",
    "update_sym_lambda",
    "update_skew_pair",
    "update_covariance_atom",
    "eigen_objective",
    "skew_delta",
    "skew_delta_bound",
    "kmeans_init",
    "random_init",
    "learn",
]

KMEANS = "kmeans"
RANDOM = "random"
IMAG_TOL = 1e-9
MAX_HALVINGS = 20


@dataclass(eq=False)
class AtomPair:
    """One dictionary index: a symmetric atom, a skew atom and an optional H."""

    sym_canon: CanonicalAtom
    skew_canon: CanonicalAtom
    h: Optional[np.ndarray] = None
    label: object = None


@dataclass(eq=False)
class Dictionary:
    sym_atoms: list
    skew_atoms: list
    cov_factors: Optional[list] = None
    labels: Optional[list] = None

    def __post_init__(self):
        if len(self.sym_atoms) != len(self.skew_atoms):
            raise DimensionMismatch("both families need the same number of atoms")
        if self.cov_factors is not None and len(self.cov_factors) != self.j:
            raise DimensionMismatch("one covariance factor per atom index")
        if self.labels is not None and len(self.labels) != self.j:
            raise DimensionMismatch("one label per atom index")

    @property
    def j(self) -> int:
        return len(self.sym_atoms)

    def family(self, which: str) -> list:
        return self.sym_atoms if which == SYMMETRIC else self.skew_atoms

    def atom_pairs(self) -> list:
        hs = self.cov_factors or [None] * self.j
        labels = self.labels or [None] * self.j
        return [
            AtomPair(s, k, h, lab)
            for s, k, h, lab in zip(self.sym_atoms, self.skew_atoms, hs, labels)
        ]

    def copy(self) -> "Dictionary":
        return Dictionary(
            [a.copy() for a in self.sym_atoms],
            [a.copy() for a in self.skew_atoms],
            None if self.cov_factors is None else [h.copy() for h in self.cov_factors],
            None if self.labels is None else list(self.labels),
        )

    @staticmethod
    def concatenate(dicts: Sequence["Dictionary"]) -> "Dictionary":
        has_h = all(d.cov_factors is not None for d in dicts)
        return Dictionary(
            [a for d in dicts for a in d.sym_atoms],
            [a for d in dicts for a in d.skew_atoms],
            [h for d in dicts for h in d.cov_factors] if has_h else None,
            [lab for d in dicts for lab in (d.labels or [None] * d.j)],
        )


@dataclass
class DlConfig:
    j: int = 4
    sparsity: float = DEFAULT_SPARSITY
    sn_scale: float = DEFAULT_SN_SCALE
    cov_weight: float = 1.0
    step_size: float = 0.1
    max_outer_iters: int = 30
    max_rho_steps: int = 5
    tol: float = 1e-6
    seed: int = 0
    init: str = KMEANS
    kmeans_iters: int = 10
    center_sweeps: int = 3
    coding_max_iter: int = 1000
    coding_tol: float = 1e-8
    # recompute the full objective after every atom update and raise on increase
    check_monotone: bool = False
    slack: float = 1e-8

    def __post_init__(self):
        if self.j < 1:
            raise ValueError("j must be at least 1")
        if self.sparsity < 0:
            raise ValueError("sparsity must be nonnegative")
        if not 0.0 <= self.cov_weight <= 1.0:
            raise ValueError("cov_weight must lie in [0, 1]")
        for name in ("sn_scale", "step_size", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.init not in (KMEANS, RANDOM):
            raise ValueError(f"init must be {KMEANS!r} or {RANDOM!r}")


@dataclass
class LearningTrace:
    """Per outer iteration: penalized objective (coding loss incl. l1 term)."""

    objective_per_iter: list = field(default_factory=list)
    reconstruction_per_iter: list = field(default_factory=list)
    atom_change_norms: list = field(default_factory=list)
    # (outer iteration, update name, reconstruction objective) when watched
    update_objectives: list = field(default_factory=list)
    converged: bool = False
    diagnostic: str = ""


@dataclass
class CodeMatrix:
    z_sym: np.ndarray
    z_skew: np.ndarray

    def family(self, which: str) -> np.ndarray:
        return self.z_sym if which == SYMMETRIC else self.z_skew

    def copy(self) -> "CodeMatrix":
        return CodeMatrix(self.z_sym.copy(), self.z_skew.copy())


FAMILIES = (SYMMETRIC, SKEW)


def _data_part(x, which: str) -> CanonicalAtom:
    return x.sym_canon if which == SYMMETRIC else x.skew_canon


# ---------------------------------------------------------------- kernels


def _cov_gram(ha: Sequence, hb: Sequence) -> np.ndarray:
    return np.array([[float(np.sum((a.T @ b) ** 2)) for b in hb] for a in ha])


def _family_kernels(atoms, data_parts, beta=1.0, h_atoms=None, h_data=None):
    """Atom Gram (J x J) and atom-data cross kernels (J x N) for one family."""
    j = len(atoms)
    k_mat = np.empty((j, j))
    for r in range(j):
        for s in range(r, j):
            k_mat[r, s] = k_mat[s, r] = canonical_kernel(atoms[r], atoms[s])
    k_x = np.array([[canonical_kernel(a, x) for x in data_parts] for a in atoms])
    k_x = k_x.reshape(j, len(data_parts))
    if beta < 1.0:
        if h_atoms is None or h_data is None:
            raise MissingCovariance("covariance weight < 1 needs factors on atoms and data")
        k_mat = beta * k_mat + (1.0 - beta) * _cov_gram(h_atoms, h_atoms)
        k_x = beta * k_x + (1.0 - beta) * _cov_gram(h_atoms, h_data)
    return k_mat, k_x


def _self_terms(data_parts, beta, h_data) -> np.ndarray:
    n = np.array([p.n for p in data_parts], dtype=float)
    if beta < 1.0:
        nv = np.array([h.shape[1] for h in h_data], dtype=float)
        return beta * n + (1.0 - beta) * nv
    return n


def _family_objective(k_mat, k_x, self_terms, z) -> float:
    # sum_i  k(X_i, X_i) - 2 z_i^T k_i + z_i^T K z_i
    return float(np.sum(self_terms) - 2.0 * np.sum(z * k_x) + np.sum(z * (k_mat @ z)))


def _h_lists(data, dictionary, beta):
    if beta >= 1.0:
        return None, None
    if dictionary.cov_factors is None or any(getattr(x, "h", None) is None for x in data):
        raise MissingCovariance("covariance weight < 1 needs factors on atoms and data")
    return dictionary.cov_factors, [x.h for x in data]


def _check_codes(codes: CodeMatrix, j: int, n: int):
    for z in (codes.z_sym, codes.z_skew):
        if z.shape != (j, n):
            raise DimensionMismatch(f"code matrix is {z.shape}, expected ({j}, {n})")


def dl_objective(data: Sequence, dictionary: Dictionary, codes: CodeMatrix, beta: float = 1.0) -> float:
    """Summed two-family reconstruction loss in kernel form (no l1 term)."""
    _check_codes(codes, dictionary.j, len(data))
    h_atoms, h_data = _h_lists(data, dictionary, beta)
    total = 0.0
    for fam in FAMILIES:
        parts = [_data_part(x, fam) for x in data]
        k_mat, k_x = _family_kernels(dictionary.family(fam), parts, beta, h_atoms, h_data)
        total += _family_objective(k_mat, k_x, _self_terms(parts, beta, h_data), codes.family(fam))
    return total


def penalized_objective(data, dictionary, codes, beta=1.0, sparsity=DEFAULT_SPARSITY) -> float:
    l1 = np.abs(codes.z_sym).sum() + np.abs(codes.z_skew).sum()
    return dl_objective(data, dictionary, codes, beta) + sparsity * float(l1)


def encode(
    data: Sequence,
    dictionary: Dictionary,
    sparsity: float = DEFAULT_SPARSITY,
    beta: float = 1.0,
    warm: Optional[CodeMatrix] = None,
    max_iter: int = 1000,
    tol: float = 1e-8,
) -> CodeMatrix:
    """Code every datum against each family (optionally warm-started)."""
    h_atoms, h_data = _h_lists(data, dictionary, beta)
    out = {}
    for fam in FAMILIES:
        parts = [_data_part(x, fam) for x in data]
        k_mat, k_x = _family_kernels(dictionary.family(fam), parts, beta, h_atoms, h_data)
        z = np.zeros_like(k_x)
        for i in range(len(data)):
            z0 = None if warm is None else warm.family(fam)[:, i]
            prob = CodingProblem(k_mat, k_x[:, i], sparsity, max_iter, tol)
            z[:, i] = solve_kernel_lasso(prob, z0).z
        out[fam] = z
    return CodeMatrix(out[SYMMETRIC], out[SKEW])


# ------------------------------------------------------ S matrices, weights


def _partners(atoms, data_parts, z, r):
    """(partner, coefficient) pairs whose weighted F's sum to S for atom r."""
    out = []
    zr = z[r]
    for j, atom in enumerate(atoms):
        if j == r:
            continue
        coef = float(zr @ z[j])
        if coef != 0.0:
            out.append((atom, coef))
    for i, part in enumerate(data_parts):
        if zr[i] != 0.0:
            out.append((part, -float(zr[i])))
    return out


def _s_complex(partners, lam, m) -> np.ndarray:
    s = np.zeros((m, m), dtype=complex)
    for atom, coef in partners:
        u = atom.complex_basis()
        s += coef * ((u * _E(lam, atom.eigenvalues())) @ u.conj().T)
    return s


def _realify(s: np.ndarray, what: str) -> np.ndarray:
    scale = 1.0 + np.abs(s).max(initial=0.0)
    if np.abs(s.imag).max(initial=0.0) > IMAG_TOL * scale:
        raise ComplexResidue(f"{what} has imaginary residue {np.abs(s.imag).max():.3g}")
    s = s.real
    return 0.5 * (s + s.T)


def _family_setup(r, family, data, dictionary, codes):
    atoms = dictionary.family(family)
    if not 0 <= r < len(atoms):
        raise IndexError(f"atom index {r} out of range")
    _check_codes(codes, dictionary.j, len(data))
    return atoms, [_data_part(x, family) for x in data], codes.family(family)


def compute_S(r, k, family, data, dictionary, codes, lam=None) -> np.ndarray:
    """S for column ``k`` of atom ``r`` (0-based) at eigenvalue ``lam``.

    ``lam`` defaults to the atom's current k-th eigenvalue. The result is
    real symmetric for the symmetric family (checked); for the skew family the
    single-column matrix is Hermitian and returned complex, see ``skew_pair_S``.
    """
    atoms, parts, z = _family_setup(r, family, data, dictionary, codes)
    atom = atoms[r]
    if lam is None:
        lam = atom.eigenvalues()[k]
    s = _s_complex(_partners(atoms, parts, z, r), lam, atom.m)
    if family == SYMMETRIC:
        return _realify(s, "S")
    return 0.5 * (s + s.conj().T)


def skew_pair_S(r, plane, data, dictionary, codes, theta=None):
    """Real averaged matrix S' and the difference S'' for one skew plane."""
    atoms, parts, z = _family_setup(r, SKEW, data, dictionary, codes)
    if theta is None:
        theta = atoms[r].theta[plane]
    partners = _partners(atoms, parts, z, r)
    s1 = _s_complex(partners, 1j * theta, atoms[r].m)
    s2 = _s_complex(partners, -1j * theta, atoms[r].m)
    return _realify(0.5 * (s1 + s2), "S'"), s1 - s2


def _delta(s_dd: np.ndarray, q1, q2) -> float:
    # (i/2)(x - conj x) with x = q1^T S'' q2 is -Im(x)
    return float(-(q1 @ s_dd.imag @ q2))


def skew_delta(r, plane, data, dictionary, codes) -> float:
    """The cross term of the pair objective for the atom's current columns."""
    atom = dictionary.skew_atoms[r]
    _, s_dd = skew_pair_S(r, plane, data, dictionary, codes)
    return _delta(s_dd, atom.basis[:, 2 * plane], atom.basis[:, 2 * plane + 1])


def skew_delta_bound(r, plane, data, dictionary, codes) -> float:
    """Triangle-inequality bound on |delta| from spectral norms of F differences."""
    atoms, parts, z = _family_setup(r, SKEW, data, dictionary, codes)
    lam = 1j * atoms[r].theta[plane]

    def fdiff(other):
        u = other.complex_basis()
        mu = other.eigenvalues()
        e = _E(lam, mu) - _E(np.conj(lam), mu)
        return np.linalg.norm((u * e) @ u.conj().T, 2)

    total = 0.0
    for i, part in enumerate(parts):
        if z[r, i] == 0.0:
            continue
        inner = sum(abs(z[j, i]) * fdiff(atoms[j]) for j in range(len(atoms)) if j != r)
        total += abs(z[r, i]) * (inner + fdiff(part))
    return float(total)


# --------------------------------------------------------- column updates


def _min_eig_frame(w: np.ndarray, s: np.ndarray, p: int):
    vals, vecs = np.linalg.eigh(w.T @ s @ w)
    u = sign_normalize_columns(vecs[:, :p])
    return w @ u, float(vals[:p].sum())


def update_sym_column(atom: CanonicalAtom, k: int, s: np.ndarray):
    """Replace basis column ``k`` by the minimizer of ``u^T S u`` in the complement
    of the other columns. Returns ``(new_atom, objective_term)``."""
    others = np.delete(atom.basis, k, axis=1)
    w = orthonormal_complement(others)
    col, term = _min_eig_frame(w, np.asarray(s, dtype=float), 1)
    new = atom.copy()
    new.basis[:, k] = col[:, 0]
    return new, term


def update_skew_columns(atom: CanonicalAtom, plane: int, s_pair: np.ndarray):
    """Replace the two columns of ``plane`` by the minimizer of ``tr(Q^T S' Q)`` in
    the complement of the other columns. Returns ``(new_atom, objective_term)``."""
    c1, c2 = 2 * plane, 2 * plane + 1
    w = orthonormal_complement(np.delete(atom.basis, [c1, c2], axis=1))
    frame, term = _min_eig_frame(w, np.asarray(s_pair, dtype=float), 2)
    new = atom.copy()
    new.basis[:, c1], new.basis[:, c2] = frame[:, 0], frame[:, 1]
    return new, term


# ------------------------------------------------------- eigenvalue steps


def _dE_dt(t, d, mu):
    """Derivative of E(t*d, mu) in real t, for a unit direction d (1 or +/-i)."""
    mu2 = np.abs(mu) ** 2
    c = np.real(d * np.conj(mu))
    num = (1.0 - t * t) * (1.0 - mu2)
    den = 1.0 - 2.0 * t * c + t * t * mu2
    dnum = -2.0 * t * (1.0 - mu2)
    dden = -2.0 * c + 2.0 * t * mu2
    return (dnum * den - num * dden) / den**2


@dataclass
class EigenObjective:
    """``phi(t) = sum_l w_l E(t * d_l, mu_l)`` for the eigenvalue parameter t.

    For a symmetric column d = 1; for a skew plane each partner eigenvalue
    appears twice, once with d = i (first column) and once with d = -i.
    """

    mu: np.ndarray
    w: np.ndarray
    d: np.ndarray
    scale: float

    def phi(self, t: float) -> float:
        return float(np.sum(self.w * _E(t * self.d, self.mu)))

    def dphi_dt(self, t: float) -> float:
        return float(np.sum(self.w * _dE_dt(t, self.d, self.mu)))

    @staticmethod
    def t_of_rho(rho, a):
        return float(np.clip(np.tanh(0.5 * a * rho), -SN_CEILING, SN_CEILING))

    @staticmethod
    def rho_of_t(t, a):
        return 2.0 * np.arctanh(np.clip(t, -SN_CEILING, SN_CEILING)) / a

    def phi_rho(self, rho: float) -> float:
        return self.phi(self.t_of_rho(rho, self.scale))

    def dphi_drho(self, rho: float) -> float:
        t = self.t_of_rho(rho, self.scale)
        return self.dphi_dt(t) * 0.5 * self.scale * (1.0 - t * t)


def _weights(partners, u: np.ndarray):
    mus, ws = [], []
    for atom, coef in partners:
        ub = atom.complex_basis()
        mus.append(atom.eigenvalues())
        ws.append(coef * np.abs(ub.conj().T @ u) ** 2)
    if not mus:
        return np.zeros(0, complex), np.zeros(0)
    return np.concatenate(mus), np.concatenate(ws)


def _sym_eigen_objective(partners, u, a_scale) -> EigenObjective:
    mu, w = _weights(partners, u.astype(complex))
    return EigenObjective(mu, w, np.ones_like(mu), a_scale)


def _skew_eigen_objective(partners, q1, q2, a_scale) -> EigenObjective:
    r2 = np.sqrt(0.5)
    mu1, w1 = _weights(partners, r2 * (q1 + 1j * q2))
    mu2, w2 = _weights(partners, r2 * (q1 - 1j * q2))
    d = np.concatenate([np.full(mu1.size, 1j), np.full(mu2.size, -1j)])
    return EigenObjective(np.concatenate([mu1, mu2]), np.concatenate([w1, w2]), d, a_scale)


def eigen_objective(r, k, family, data, dictionary, codes, a_scale=DEFAULT_SN_SCALE) -> EigenObjective:
    """The 1-D eigenvalue subproblem for column ``k`` (sym) or plane ``k`` (skew)."""
    atoms, parts, z = _family_setup(r, family, data, dictionary, codes)
    partners = _partners(atoms, parts, z, r)
    b = atoms[r].basis
    if family == SYMMETRIC:
        return _sym_eigen_objective(partners, b[:, k], a_scale)
    return _skew_eigen_objective(partners, b[:, 2 * k], b[:, 2 * k + 1], a_scale)


def _descend(obj: EigenObjective, t0: float, step: float, max_steps: int) -> float:
    """Backtracking gradient descent in rho; the objective never increases."""
    rho = obj.rho_of_t(t0, obj.scale)
    t, f = obj.t_of_rho(rho, obj.scale), obj.phi(t0)
    # t may differ from t0 by roundoff through the rho round trip
    if obj.phi(t) > f:
        t = t0
    for _ in range(max_steps):
        g = obj.dphi_drho(rho)
        if g == 0.0 or not np.isfinite(g):
            break
        h = step
        for _ in range(MAX_HALVINGS + 1):
            rho_new = rho - h * g
            t_new = obj.t_of_rho(rho_new, obj.scale)
            f_new = obj.phi(t_new)
            if f_new <= f:
                break
            h *= 0.5
        else:
            break
        if f_new == f and t_new == t:
            break
        rho, t, f = rho_new, t_new, f_new
    return float(t)


def update_sym_lambda(r, k, data, dictionary, codes, cfg: DlConfig) -> float:
    obj = eigen_objective(r, k, SYMMETRIC, data, dictionary, codes, cfg.sn_scale)
    lam0 = float(dictionary.sym_atoms[r].lam[k])
    return _descend(obj, lam0, cfg.step_size, cfg.max_rho_steps)


def _pair_value(s_p, s_dd, q1, q2) -> float:
    return float(q1 @ s_p @ q1 + q2 @ s_p @ q2 + _delta(s_dd, q1, q2))


def _update_skew_plane(atom, partners, plane, cfg) -> CanonicalAtom:
    theta = atom.theta[plane]
    s1 = _s_complex(partners, 1j * theta, atom.m)
    s2 = _s_complex(partners, -1j * theta, atom.m)
    s_p, s_dd = _realify(0.5 * (s1 + s2), "S'"), s1 - s2
    c1, c2 = 2 * plane, 2 * plane + 1
    q_old1, q_old2 = atom.basis[:, c1], atom.basis[:, c2]

    cand, _ = update_skew_columns(atom, plane, s_p)
    q1, q2 = cand.basis[:, c1], cand.basis[:, c2]
    # the neglected cross term flips sign with q2; pick the orientation where
    # it helps, and keep the old plane if the exact pair value would rise
    if _delta(s_dd, q1, q2) > 0:
        q2 = -q2
    new = atom.copy()
    if _pair_value(s_p, s_dd, q1, q2) <= _pair_value(s_p, s_dd, q_old1, q_old2):
        new.basis[:, c1], new.basis[:, c2] = q1, q2
    obj = _skew_eigen_objective(partners, new.basis[:, c1], new.basis[:, c2], cfg.sn_scale)
    new.theta[plane] = _descend(obj, theta, cfg.step_size, cfg.max_rho_steps)
    return new


def update_skew_pair(r, plane, data, dictionary, codes, cfg: DlConfig) -> CanonicalAtom:
    """New skew atom with plane ``plane`` (columns and rate) updated."""
    atoms, parts, z = _family_setup(r, SKEW, data, dictionary, codes)
    return _update_skew_plane(atoms[r], _partners(atoms, parts, z, r), plane, cfg)


def _update_atom(atom: CanonicalAtom, partners, cfg: DlConfig) -> CanonicalAtom:
    """One pass over every column/plane of a single atom."""
    if not partners:
        return atom
    if atom.kind == SYMMETRIC:
        for k in range(atom.n):
            s = _realify(_s_complex(partners, atom.lam[k], atom.m), "S")
            atom, _ = update_sym_column(atom, k, s)
            obj = _sym_eigen_objective(partners, atom.basis[:, k], cfg.sn_scale)
            atom.lam[k] = _descend(obj, atom.lam[k], cfg.step_size, cfg.max_rho_steps)
        return atom
    for plane in range(atom.theta.size):
        atom = _update_skew_plane(atom, partners, plane, cfg)
    if atom.odd_null:
        s = _realify(_s_complex(partners, 0.0, atom.m), "S")
        atom, _ = update_sym_column(atom, atom.n - 1, s)
    return atom


def _cov_matrix(r, h_atoms, h_data, zs) -> np.ndarray:
    m = h_atoms[r].shape[0]
    s = np.zeros((m, m))
    for z in zs:
        for i in range(z.shape[1]):
            if z[r, i] == 0.0:
                continue
            acc = -h_data[i] @ h_data[i].T
            for j in range(len(h_atoms)):
                if j != r and z[j, i] != 0.0:
                    acc = acc + z[j, i] * (h_atoms[j] @ h_atoms[j].T)
            s += z[r, i] * acc
    return 0.5 * (s + s.T)


def _min_cov_frame(s, h_old):
    if not np.any(s):
        return h_old.copy()
    vals, vecs = np.linalg.eigh(s)
    return sign_normalize_columns(vecs[:, : h_old.shape[1]])


def update_covariance_atom(r, data, dictionary, codes) -> np.ndarray:
    if dictionary.cov_factors is None or any(getattr(x, "h", None) is None for x in data):
        raise MissingCovariance("covariance update needs factors on atoms and data")
    _check_codes(codes, dictionary.j, len(data))
    s = _cov_matrix(
        r, dictionary.cov_factors, [x.h for x in data], [codes.z_sym, codes.z_skew]
    )
    return _min_cov_frame(s, dictionary.cov_factors[r])


# ------------------------------------------------------------ initialization


def random_init(data: Sequence, cfg: DlConfig) -> Dictionary:
    """J atoms copied from randomly chosen training data."""
    if len(data) < cfg.j:
        raise TooFewSequences(f"need at least {cfg.j} sequences, got {len(data)}")
    rng = np.random.default_rng(cfg.seed)
    idx = rng.choice(len(data), size=cfg.j, replace=False)
    return _dictionary_from(data, idx)


def _dictionary_from(data, idx) -> Dictionary:
    hs = [getattr(data[i], "h", None) for i in idx]
    return Dictionary(
        [data[i].sym_canon.copy() for i in idx],
        [data[i].skew_canon.copy() for i in idx],
        None if any(h is None for h in hs) else [h.copy() for h in hs],
    )


def _center(members: list, cfg: DlConfig) -> CanonicalAtom:
    """Subspace mean of a cluster: the single atom minimizing the loss with codes 1/q."""
    q = len(members)
    k = np.array([[canonical_kernel(a, b) for b in members] for a in members])
    atom = members[int(np.argmax(k.sum(axis=1)))].copy()
    if q == 1:
        return atom
    partners = [(x, -1.0 / q) for x in members]
    for _ in range(cfg.center_sweeps):
        atom = _update_atom(atom, partners, cfg)
    return atom


def _kmeans_family(parts: list, cfg: DlConfig, rng) -> tuple[list, np.ndarray]:
    n_data = len(parts)
    centers = [parts[i].copy() for i in rng.choice(n_data, size=cfg.j, replace=False)]
    assign = None
    for _ in range(cfg.kmeans_iters):
        k = np.array([[canonical_kernel(c, x) for x in parts] for c in centers])
        dist = 2.0 * (np.array([c.n for c in centers])[:, None] - k)
        new_assign = np.argmin(dist, axis=0)
        counts = np.bincount(new_assign, minlength=cfg.j)
        for c in np.flatnonzero(counts == 0):
            # reseed from the datum worst served by its current center
            own = dist[new_assign, np.arange(n_data)]
            movable = [i for i in np.argsort(-own) if counts[new_assign[i]] > 1]
            i = movable[0]
            counts[new_assign[i]] -= 1
            new_assign[i] = c
            counts[c] = 1
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        centers = [_center([parts[i] for i in np.flatnonzero(assign == c)], cfg) for c in range(cfg.j)]
    return centers, assign


def kmeans_init(data: Sequence, cfg: DlConfig) -> Dictionary:
    """Cluster each family by projection distance ``2(n - k)`` and use cluster means.

    Covariance factors follow the symmetric-family clusters.
    """
    if len(data) < cfg.j:
        raise TooFewSequences(f"need at least {cfg.j} sequences, got {len(data)}")
    rng = np.random.default_rng(cfg.seed)
    sym, assign = _kmeans_family([x.sym_canon for x in data], cfg, rng)
    skew, _ = _kmeans_family([x.skew_canon for x in data], cfg, rng)
    hs = None
    if all(getattr(x, "h", None) is not None for x in data):
        hs = []
        for c in range(cfg.j):
            members = np.flatnonzero(assign == c)
            h_mem = [data[i].h for i in members]
            s = -sum(h @ h.T for h in h_mem) / len(h_mem)
            hs.append(_min_cov_frame(s, h_mem[0]))
    return Dictionary(sym, skew, hs)


# ------------------------------------------------------------------ driver


def _change_norm(old: Dictionary, new: Dictionary) -> float:
    total = 0.0
    for fam in FAMILIES:
        for a, b in zip(old.family(fam), new.family(fam)):
            total += 2.0 * (a.n - canonical_kernel(a, b))
    return float(max(total, 0.0))


def learn(
    data: Sequence,
    cfg: DlConfig,
    init: Optional[Dictionary] = None,
    on_update: Optional[Callable[[float], None]] = None,
):
    """Alternate coding and atom updates; returns (Dictionary, CodeMatrix, LearningTrace).

    ``on_update`` (if given) receives the full reconstruction objective after
    every atom update; this forces the extra kernel evaluations that
    ``cfg.check_monotone`` also uses.
    """
    if not data:
        raise TooFewSequences("no training data")
    beta = cfg.cov_weight
    if init is not None:
        dictionary = init.copy()
    elif cfg.init == RANDOM:
        dictionary = random_init(data, cfg)
    else:
        dictionary = kmeans_init(data, cfg)
    _h_lists(data, dictionary, beta)

    def code(warm=None):
        return encode(data, dictionary, cfg.sparsity, beta, warm, cfg.coding_max_iter, cfg.coding_tol)

    codes = code()
    trace = LearningTrace()
    trace.objective_per_iter.append(penalized_objective(data, dictionary, codes, beta, cfg.sparsity))
    trace.reconstruction_per_iter.append(dl_objective(data, dictionary, codes, beta))
    watch = cfg.check_monotone or on_update is not None
    last = trace.reconstruction_per_iter[-1]

    it = 0

    def after_update(what):
        nonlocal last
        if not watch:
            return
        cur = dl_objective(data, dictionary, codes, beta)
        trace.update_objectives.append((it, what, cur))
        if on_update is not None:
            on_update(cur)
        if cfg.check_monotone and cur > last + cfg.slack * max(1.0, abs(last)):
            raise ObjectiveIncrease(f"{what} raised the objective from {last!r} to {cur!r}")
        last = cur

    for it in range(cfg.max_outer_iters):
        prev = trace.objective_per_iter[-1]
        if prev <= 0.0:
            trace.converged = True
            break
        old = dictionary.copy()
        for fam in FAMILIES:
            atoms = dictionary.family(fam)
            parts = [_data_part(x, fam) for x in data]
            z = codes.family(fam)
            for r in range(dictionary.j):
                if not np.any(z[r]):
                    continue
                atoms[r] = _update_atom(atoms[r], _partners(atoms, parts, z, r), cfg)
                after_update(f"{fam} atom {r}")
        if beta < 1.0:
            h_data = [x.h for x in data]
            for r in range(dictionary.j):
                s = _cov_matrix(r, dictionary.cov_factors, h_data, [codes.z_sym, codes.z_skew])
                dictionary.cov_factors[r] = _min_cov_frame(s, dictionary.cov_factors[r])
                after_update(f"covariance factor {r}")
        codes = code(codes)
        cur = penalized_objective(data, dictionary, codes, beta, cfg.sparsity)
        trace.objective_per_iter.append(cur)
        trace.reconstruction_per_iter.append(dl_objective(data, dictionary, codes, beta))
        trace.atom_change_norms.append(_change_norm(old, dictionary))
        last = trace.reconstruction_per_iter[-1]
        log.debug("iteration %d objective %.10g", it + 1, cur)
        if cur > prev + cfg.slack * max(1.0, abs(prev)):
            trace.diagnostic = f"objective rose from {prev!r} to {cur!r} at iteration {it + 1}"
            log.warning(trace.diagnostic)
            break
        if abs(prev - cur) <= cfg.tol * max(abs(prev), 1e-300):
            trace.converged = True
            break
    return dictionary, codes, trace
