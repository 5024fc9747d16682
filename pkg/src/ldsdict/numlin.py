"""Dense linear-algebra primitives.

Everything here works on small dense matrices (n rarely above 20) and favours
determinism over speed: eigenvectors come back in a fixed order with a fixed
sign so that canonical forms and frozen test values do not depend on the
LAPACK build.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    FullRankInput,
    NotSkewSymmetric,
    NotSymmetric,
    SingularSystem,
)

__all__ = [
    "SymEig",
    "SkewCanonical",
    "solve_discrete_sylvester",
    "sym_eig",
    "skew_canonical",
    "skew_block_matrix",
    "skew_to_complex",
    "orthonormal_complement",
    "soft_threshold",
    "sign_normalize_columns",
]

STRUCTURE_RTOL = 1e-8


class SymEig(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


class SkewCanonical(NamedTuple):
    """Real pairing basis of a skew-symmetric matrix.

    ``a = q @ skew_block_matrix(theta, odd_null) @ q.T`` where every 2x2 block is
    ``[[0, theta_k], [-theta_k, 0]]``.
    """

    theta: np.ndarray
    q: np.ndarray
    odd_null: bool


def _as_square(a, name="a") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def sign_normalize_columns(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so that each one's first non-negligible entry is positive."""
    v = np.array(v, copy=True)
    if v.size == 0:
        return v
    scale = np.max(np.abs(v), axis=0, keepdims=True)
    for j in range(v.shape[1]):
        col = v[:, j]
        idx = np.flatnonzero(np.abs(col) > tol * max(scale[0, j], 1e-300))
        if idx.size and col[idx[0]] < 0:
            v[:, j] = -col
    return v


def solve_discrete_sylvester(a1, a2, rhs) -> np.ndarray:
    """Solve ``a1.T @ X @ a2 - X = -rhs`` by Kronecker vectorization.

    With column-major ``vec``, ``vec(a1.T X a2) = (a2.T kron a1.T) vec(X)``.
    The dense system is O(n^6); fine for the n <= 30 this package targets.
    Complex inputs are accepted (the solve is done in complex arithmetic).
    """
    a1 = np.asarray(a1)
    a2 = np.asarray(a2)
    rhs = np.asarray(rhs)
    if a1.ndim != 2 or a1.shape[0] != a1.shape[1]:
        raise DimensionMismatch(f"a1 must be square, got {a1.shape}")
    if a2.ndim != 2 or a2.shape[0] != a2.shape[1]:
        raise DimensionMismatch(f"a2 must be square, got {a2.shape}")
    if rhs.shape != (a1.shape[0], a2.shape[0]):
        raise DimensionMismatch(
            f"rhs shape {rhs.shape} incompatible with a1 {a1.shape} and a2 {a2.shape}"
        )
    n1, n2 = a1.shape[0], a2.shape[0]
    dtype = np.result_type(a1, a2, rhs, float)
    system = np.kron(a2.T, a1.T).astype(dtype) - np.eye(n1 * n2, dtype=dtype)
    # eigenvalues of the operator are mu_i * nu_j - 1; near zero means |mu nu| ~ 1
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularSystem(
            f"Sylvester operator is numerically singular (cond={cond:.3g}); "
            "are both transition matrices strictly stable?"
        )
    x = np.linalg.solve(system, -rhs.reshape(-1, order="F").astype(dtype))
    return x.reshape((n1, n2), order="F")


def sym_eig(a) -> SymEig:
    """Eigendecomposition of a symmetric matrix, sorted by descending |value|."""
    a = _as_square(a)
    norm = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > STRUCTURE_RTOL * (1.0 + norm):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    a = 0.5 * (a + a.T)
    values, vectors = np.linalg.eigh(a)
    # stable sort on (-|v|, -v) keeps ties deterministic
    order = np.lexsort((-values, -np.abs(values)))
    values = values[order]
    vectors = sign_normalize_columns(vectors[:, order])
    return SymEig(values, vectors)


def skew_canonical(a) -> SkewCanonical:
    """Real canonical decomposition of a skew-symmetric matrix.

    Returns ``theta >= 0`` sorted descending and an orthogonal ``q`` whose
    column pairs ``(q[:, 2k], q[:, 2k+1])`` span the rotation planes. For odd
    ``n`` the last column spans the null direction.
    """
    a = _as_square(a)
    n = a.shape[0]
    norm = np.linalg.norm(a)
    if np.linalg.norm(a + a.T) > STRUCTURE_RTOL * (1.0 + norm):
        raise NotSkewSymmetric("matrix is not skew-symmetric within tolerance")
    a = 0.5 * (a - a.T)
    t, z = scipy.linalg.schur(a, output="real")

    planes: list[tuple[float, np.ndarray, np.ndarray]] = []
    singles: list[np.ndarray] = []
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            b = t[i, i + 1]
            q1, q2 = z[:, i].copy(), z[:, i + 1].copy()
            if b < 0:
                q2 = -q2
            planes.append((abs(b), q1, q2))
            i += 2
        else:
            singles.append(z[:, i].copy())
            i += 1
    # zero eigenvalues from 1x1 blocks pair into theta = 0 planes
    while len(singles) >= 2:
        q1, q2 = singles.pop(0), singles.pop(0)
        planes.append((0.0, q1, q2))
    planes.sort(key=lambda p: -p[0])

    theta = np.array([p[0] for p in planes], dtype=float)
    cols = []
    for _, q1, q2 in planes:
        # flipping both columns leaves the block unchanged
        s = sign_normalize_columns(q1[:, None])[:, 0]
        if not np.array_equal(s, q1):
            q1, q2 = -q1, -q2
        cols.extend([q1, q2])
    odd = bool(singles)
    if odd:
        cols.append(sign_normalize_columns(singles[0][:, None])[:, 0])
    q = np.column_stack(cols) if cols else np.zeros((n, 0))
    return SkewCanonical(theta, q, odd)


def skew_block_matrix(theta, odd_null: bool = False) -> np.ndarray:
    """Block-diagonal skew matrix with blocks ``[[0, t], [-t, 0]]``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = 2 * theta.size + int(odd_null)
    out = np.zeros((n, n))
    for k, t in enumerate(theta):
        out[2 * k, 2 * k + 1] = t
        out[2 * k + 1, 2 * k] = -t
    return out


def skew_to_complex(theta, q, odd_null: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Materialize the complex diagonalizing pair from a real pairing basis.

    Eigenvalues alternate ``+i theta_k, -i theta_k``; the matching columns are
    ``(q_{2k-1} +/- i q_{2k}) / sqrt(2)``. An odd trailing column keeps
    eigenvalue zero and is copied unchanged.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    q = np.asarray(q, dtype=float)
    p = theta.size
    lam = np.zeros(2 * p + int(odd_null), dtype=complex)
    lam[0 : 2 * p : 2] = 1j * theta
    lam[1 : 2 * p : 2] = -1j * theta
    u = np.zeros((q.shape[0], lam.size), dtype=complex)
    r2 = np.sqrt(0.5)
    u[:, 0 : 2 * p : 2] = r2 * (q[:, 0 : 2 * p : 2] + 1j * q[:, 1 : 2 * p : 2])
    u[:, 1 : 2 * p : 2] = r2 * (q[:, 0 : 2 * p : 2] - 1j * q[:, 1 : 2 * p : 2])
    if odd_null:
        u[:, -1] = q[:, -1]
    return lam, u


def orthonormal_complement(basis) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(basis)``.

    Taken from the trailing left singular vectors of a full SVD, so the result
    is deterministic for a given input (columns sign-normalized).
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2:
        raise DimensionMismatch(f"basis must be 2-D, got shape {basis.shape}")
    m, p = basis.shape
    if p >= m:
        raise FullRankInput(f"basis with {p} columns spans all of R^{m}")
    if p == 0:
        return np.eye(m)
    u, _, _ = np.linalg.svd(basis, full_matrices=True)
    return sign_normalize_columns(u[:, p:])


def soft_threshold(x, t):
    """``sign(x) * max(|x| - t, 0)``; works elementwise on arrays."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
