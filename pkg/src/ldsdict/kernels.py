"""Comparisons between LDSs through their extended observability subspaces.

Two computational routes are provided for the projection kernel
``||V1^T V2||_F^2``:

* the general route, valid for any stable (A, C): cross Gram from a discrete
  Sylvester solve, orthonormalizing factors, then a small SVD;
* the closed form for diagonalized (canonical) tuples, where every Gram is
  diagonal and the kernel reduces to weighted squared overlaps of the bases.

``truncated_kernel`` builds finite stacks ``[C; CA; ...]`` explicitly and is
kept as an independent oracle for both.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .errors import (
    ComplexResidue,
    DimensionMismatch,
    Instability,
    LdsError,
    MissingCovariance,
    NearSingularGram,
    RankDeficient,
)
from .model import SKEW, SYMMETRIC, CanonicalAtom, LdsModel, TwoFoldLds
from .numlin import solve_discrete_sylvester

__all__ = [
    "PROJECTION",
    "RBF_MARTIN",
    "HYBRID",
    "DEFAULT_SIGMA2",
    "COS_FLOOR",
    "FactorL",
    "KernelMatrix",
    "KernelVector",
    "gram_cross",
    "factor",
    "principal_angles",
    "martin_distance",
    "projection_kernel",
    "embedding_distance",
    "rbf_martin_kernel",
    "canonical_E",
    "canonical_F",
    "canonical_kernel",
    "hybrid_kernel",
    "truncated_basis",
    "truncated_kernel",
    "pair_kernel",
    "self_kernel",
    "kernel_matrix",
    "kernel_vector",
    "format_kernel_grid",
]

PROJECTION = "projection"
RBF_MARTIN = "rbf-martin"
HYBRID = "hybrid"
DEFAULT_SIGMA2 = 200.0
COS_FLOOR = 1e-8
IMAG_TOL = 1e-9
GRAM_EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class FactorL:
    """``l @ l.T`` reproduces a self-Gram; ``V = O @ inv(l).T`` is orthonormal."""

    l: np.ndarray
    l_inv: np.ndarray


@dataclass
class KernelMatrix:
    k: np.ndarray
    kind: str = PROJECTION
    params: dict = field(default_factory=dict)


@dataclass
class KernelVector:
    k: np.ndarray
    kind: str = PROJECTION
    params: dict = field(default_factory=dict)


def _system(x) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(x, LdsModel):
        return x.a, x.c
    if isinstance(x, CanonicalAtom):
        return x.as_system()
    if isinstance(x, TwoFoldLds):
        return x.a_sym + x.a_skew, x.c
    a, c = x
    return np.asarray(a), np.asarray(c)


def gram_cross(m1, m2) -> np.ndarray:
    """``O1^* O2 = sum_t (A1^t)^* C1^* C2 A2^t`` via a discrete Sylvester solve."""
    a1, c1 = _system(m1)
    a2, c2 = _system(m2)
    if c1.shape[0] != c2.shape[0]:
        raise DimensionMismatch(f"observation dims differ: {c1.shape[0]} vs {c2.shape[0]}")
    # conjugate transposes make the same formula valid for complex (diagonal) tuples
    return solve_discrete_sylvester(np.conj(a1), a2, np.conj(c1).T @ c2)


def factor(self_gram) -> FactorL:
    """Orthonormalizing factor ``L = U_o S_o^{1/2}`` of a symmetric PD Gram."""
    g = np.asarray(self_gram, dtype=float)
    g = 0.5 * (g + g.T)
    s, u = np.linalg.eigh(g)
    if s.min() <= GRAM_EIG_FLOOR:
        raise NearSingularGram(f"Gram smallest eigenvalue {s.min():.3g} is not positive")
    order = np.argsort(s)[::-1]
    s, u = s[order], u[:, order]
    root = np.sqrt(s)
    return FactorL(l=u * root, l_inv=(u / root).T)


# Self factors are reused O(J) times inside kernel matrices; memoize per object.
_factor_cache: "weakref.WeakKeyDictionary[Any, FactorL]" = weakref.WeakKeyDictionary()


def _self_factor(x) -> FactorL:
    try:
        return _factor_cache[x]
    except (KeyError, TypeError):
        pass
    f = factor(gram_cross(x, x))
    try:
        _factor_cache[x] = f
    except TypeError:
        pass
    return f


def _overlap(m1, m2) -> np.ndarray:
    """``V1^T V2 = L1^{-1} O12 L2^{-T}``."""
    f1, f2 = _self_factor(m1), _self_factor(m2)
    return f1.l_inv @ gram_cross(m1, m2) @ f2.l_inv.T


def _cosines(m1, m2) -> np.ndarray:
    s = np.linalg.svd(_overlap(m1, m2), compute_uv=False)
    return np.clip(s, 0.0, 1.0)


def principal_angles(m1, m2) -> np.ndarray:
    """Principal angles between observability subspaces, ascending."""
    return np.arccos(_cosines(m1, m2))


def martin_distance(m1, m2) -> float:
    cos = np.clip(_cosines(m1, m2), COS_FLOOR, 1.0)
    return float(np.sqrt(max(-2.0 * np.sum(np.log(cos)), 0.0)))


def projection_kernel(m1, m2) -> float:
    return float(np.sum(_overlap(m1, m2) ** 2))


def embedding_distance(m1, m2) -> float:
    """Squared Frobenius distance between the embeddings ``V V^T``: ``2(n - k)``."""
    a1, c1 = _system(m1)
    return 2.0 * (c1.shape[1] - projection_kernel(m1, m2))


def rbf_martin_kernel(m1, m2, sigma2: float = DEFAULT_SIGMA2) -> float:
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    return float(np.exp(-martin_distance(m1, m2) ** 2 / sigma2))


def canonical_E(lam, lams) -> np.ndarray:
    """Diagonal of ``E(lam, Lambda)``: ``(1-|l|^2)(1-|l_k|^2) / |1 - l conj(l_k)|^2``."""
    lam = complex(lam)
    lams = np.asarray(lams, dtype=complex)
    if abs(lam) >= 1.0 or np.any(np.abs(lams) >= 1.0):
        raise Instability("canonical kernel needs all eigenvalue magnitudes below one")
    return _E(lam, lams)


def _E(lam, lams):
    # unchecked, broadcasting version used on hot paths
    num = (1.0 - np.abs(lam) ** 2) * (1.0 - np.abs(lams) ** 2)
    return num / np.abs(1.0 - lam * np.conj(lams)) ** 2


def _check_stable(atom: CanonicalAtom) -> np.ndarray:
    lam = atom.eigenvalues()
    if np.any(np.abs(lam) >= 1.0):
        raise Instability("atom has an eigenvalue of magnitude >= 1")
    return lam


def canonical_F(lam, atom: CanonicalAtom) -> np.ndarray:
    """``F = U E(lam, Lambda) U^*`` for a canonical atom (m x m, Hermitian)."""
    lams = _check_stable(atom)
    u = atom.complex_basis()
    return (u * canonical_E(lam, lams)) @ u.conj().T


def _realify(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_TOL * (1.0 + abs(value.real)):
        raise ComplexResidue(f"{what} has imaginary part {value.imag:.3g}")
    return float(value.real)


def canonical_kernel(atom_r: CanonicalAtom, other: CanonicalAtom) -> float:
    """Closed-form projection kernel between two canonical tuples.

    ``sum_k [U_r]_k^* U_o E([Lambda_r]_k, Lambda_o) U_o^* [U_r]_k``.
    """
    if atom_r.m != other.m:
        raise DimensionMismatch(f"observation dims differ: {atom_r.m} vs {other.m}")
    lr, lo = _check_stable(atom_r), _check_stable(other)
    p = other.complex_basis().conj().T @ atom_r.complex_basis()  # (n_o, n_r)
    e = _E(lr[None, :], lo[:, None])
    value = np.einsum("lk,lk,lk->", p.conj(), e, p)
    return _realify(complex(value), "canonical kernel")


def _part(x, part: Optional[str]):
    if part is None:
        return x
    if part == SYMMETRIC:
        return x.sym_canon
    if part == SKEW:
        return x.skew_canon
    raise ValueError(f"unknown part {part!r}")


def _cov_kernel(x1, x2) -> float:
    h1, h2 = getattr(x1, "h", None), getattr(x2, "h", None)
    if h1 is None or h2 is None:
        raise MissingCovariance("hybrid kernel needs covariance factors on both inputs")
    return float(np.sum((h1.T @ h2) ** 2))


def hybrid_kernel(m1, m2, beta: float, part: str = SYMMETRIC) -> float:
    """``beta * k_subspace(part) + (1 - beta) * ||H1^T H2||_F^2``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    k_m = canonical_kernel(_part(m1, part), _part(m2, part)) if beta > 0 else 0.0
    if beta == 1.0:
        return k_m
    return beta * k_m + (1.0 - beta) * _cov_kernel(m1, m2)


def truncated_basis(m, order: int) -> np.ndarray:
    """Orthonormal basis of the finite stack ``[C; CA; ...; CA^{order-1}]``."""
    if order < 1:
        raise ValueError("order must be at least 1")
    a, c = _system(m)
    blocks = [c]
    for _ in range(order - 1):
        blocks.append(blocks[-1] @ a)
    o = np.vstack(blocks)
    n = a.shape[0]
    if o.shape[0] < n:
        raise RankDeficient(f"stack of {o.shape[0]} rows cannot hold {n} independent columns")
    u, s, _ = np.linalg.svd(o, full_matrices=False)
    if s[-1] <= 1e-10 * s[0]:
        raise RankDeficient("finite observability matrix has dependent columns")
    return u[:, :n]


def truncated_kernel(m1, m2, order: int) -> float:
    v1 = truncated_basis(m1, order)
    v2 = truncated_basis(m2, order)
    return float(np.sum((v1.T @ v2) ** 2))


def _n_of(x, part=None) -> int:
    x = _part(x, part)
    if isinstance(x, CanonicalAtom):
        return x.n
    return _system(x)[1].shape[1]


def self_kernel(x, kind: str = PROJECTION, beta: float = 1.0, part: Optional[str] = None) -> float:
    """``k(x, x)``, known in closed form for every supported kind."""
    if kind == RBF_MARTIN:
        return 1.0
    if kind == HYBRID:
        h = getattr(x, "h", None)
        nv = 0 if h is None else h.shape[1]
        return beta * _n_of(x, part) + (1.0 - beta) * nv
    return float(_n_of(x, part))


def pair_kernel(
    x,
    y,
    kind: str = PROJECTION,
    sigma2: float = DEFAULT_SIGMA2,
    beta: float = 1.0,
    part: Optional[str] = None,
) -> float:
    """Dispatch one kernel evaluation by kind and input type."""
    if kind == HYBRID:
        return hybrid_kernel(x, y, beta, part or SYMMETRIC)
    if kind == RBF_MARTIN:
        return rbf_martin_kernel(_part(x, part), _part(y, part), sigma2)
    if kind != PROJECTION:
        raise ValueError(f"unknown kernel kind {kind!r}")
    xp, yp = _part(x, part), _part(y, part)
    if isinstance(xp, CanonicalAtom) and isinstance(yp, CanonicalAtom):
        return canonical_kernel(xp, yp)
    return projection_kernel(xp, yp)


def _params(kind, sigma2, beta, part):
    params: dict = {}
    if kind == RBF_MARTIN:
        params["sigma2"] = sigma2
    if kind == HYBRID:
        params["beta"] = beta
    if part is not None:
        params["part"] = part
    return params


def kernel_matrix(
    items: Sequence,
    kind: str = PROJECTION,
    sigma2: float = DEFAULT_SIGMA2,
    beta: float = 1.0,
    part: Optional[str] = None,
) -> KernelMatrix:
    """Symmetric Gram matrix over ``items`` (upper triangle computed, mirrored)."""
    j = len(items)
    k = np.empty((j, j))
    for r in range(j):
        for s in range(r, j):
            try:
                k[r, s] = pair_kernel(items[r], items[s], kind, sigma2, beta, part)
            except LdsError as exc:
                raise type(exc)(f"pair ({r}, {s}): {exc}") from exc
            k[s, r] = k[r, s]
    return KernelMatrix(k, kind, _params(kind, sigma2, beta, part))


def kernel_vector(
    x,
    items: Sequence,
    kind: str = PROJECTION,
    sigma2: float = DEFAULT_SIGMA2,
    beta: float = 1.0,
    part: Optional[str] = None,
) -> KernelVector:
    k = np.empty(len(items))
    for j, item in enumerate(items):
        try:
            k[j] = pair_kernel(x, item, kind, sigma2, beta, part)
        except LdsError as exc:
            raise type(exc)(f"item {j}: {exc}") from exc
    return KernelVector(k, kind, _params(kind, sigma2, beta, part))


def format_kernel_grid(km: KernelMatrix, ids: Optional[Sequence[str]] = None) -> str:
    """Comma-separated grid, one row per line; optional header of identifiers."""
    lines = []
    if ids is not None:
        lines.append(",".join(str(i) for i in ids))
    for row in np.atleast_2d(km.k):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
