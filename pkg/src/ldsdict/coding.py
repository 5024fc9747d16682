"""Kernel lasso coding and the two classifiers built on it."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyClass,
    EmptyReferenceSet,
    ObjectiveIncrease,
    ZeroDiagonal,
)
from .kernels import (
    DEFAULT_SIGMA2,
    PROJECTION,
    KernelMatrix,
    KernelVector,
    kernel_matrix,
    kernel_vector,
    martin_distance,
    self_kernel,
)
from .model import SKEW, SYMMETRIC
from .numlin import soft_threshold

__all__ = [
    "DEFAULT_SPARSITY",
    "SparseCode",
    "CodingProblem",
    "lasso_objective",
    "solve_kernel_lasso",
    "reconstruction_error",
    "SrcResult",
    "src_classify",
    "nn_martin_classify",
]

DEFAULT_SPARSITY = 0.1
DIAG_FLOOR = 1e-12
# sweeps may wobble by roundoff; anything above this is a real increase
SWEEP_SLACK = 1e-10


@dataclass
class SparseCode:
    z: np.ndarray
    objective: float
    iterations: int
    converged: bool
    # objective at the start and after every sweep
    history: list = field(default_factory=list)


@dataclass
class CodingProblem:
    k_mat: np.ndarray
    k_vec: np.ndarray
    sparsity: float = DEFAULT_SPARSITY
    max_iter: int = 1000
    tol: float = 1e-8

    def __post_init__(self):
        if isinstance(self.k_mat, KernelMatrix):
            self.k_mat = self.k_mat.k
        if isinstance(self.k_vec, KernelVector):
            self.k_vec = self.k_vec.k
        self.k_mat = np.atleast_2d(np.asarray(self.k_mat, dtype=float))
        self.k_vec = np.atleast_1d(np.asarray(self.k_vec, dtype=float))
        j = self.k_vec.size
        if self.k_mat.shape != (j, j):
            raise DimensionMismatch(f"K is {self.k_mat.shape} but k has length {j}")
        if self.sparsity < 0:
            raise ValueError("sparsity must be nonnegative")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter at least 1")


def lasso_objective(z, k_mat, k_vec, sparsity) -> float:
    """``z^T K z - 2 z^T k + sparsity * ||z||_1``."""
    z = np.asarray(z, dtype=float)
    return float(z @ k_mat @ z - 2.0 * z @ k_vec + sparsity * np.abs(z).sum())


def solve_kernel_lasso(p: CodingProblem, z0: Optional[np.ndarray] = None) -> SparseCode:
    """Cyclic coordinate descent; every coordinate step is an exact 1-D minimizer.

    ``z0`` warm-starts the sweep (the objective is then never above its value
    at ``z0``).
    """
    k_mat, k_vec, lam = p.k_mat, p.k_vec, p.sparsity
    diag = np.diag(k_mat).copy()
    bad = np.flatnonzero(diag <= DIAG_FLOOR)
    if bad.size:
        raise ZeroDiagonal(f"kernel diagonal entries {bad.tolist()} are not positive")
    j = k_vec.size
    z = np.zeros(j) if z0 is None else np.array(z0, dtype=float).ravel()
    if z.size != j:
        raise DimensionMismatch(f"warm start has length {z.size}, expected {j}")
    # kz tracks K @ z so each coordinate step is O(J)
    kz = k_mat @ z
    obj = lasso_objective(z, k_mat, k_vec, lam)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, p.max_iter + 1):
        max_change = 0.0
        for r in range(j):
            partial = k_vec[r] - (kz[r] - diag[r] * z[r])
            new = soft_threshold(partial, 0.5 * lam) / diag[r]
            d = new - z[r]
            if d != 0.0:
                kz += d * k_mat[:, r]
                z[r] = new
                max_change = max(max_change, abs(d))
        new_obj = lasso_objective(z, k_mat, k_vec, lam)
        if new_obj > obj + SWEEP_SLACK * (1.0 + abs(obj)):
            raise ObjectiveIncrease(
                f"coding objective rose from {obj!r} to {new_obj!r} in sweep {it}; "
                "is the kernel matrix indefinite?"
            )
        obj = new_obj
        history.append(obj)
        if max_change < p.tol:
            converged = True
            break
    return SparseCode(z=z, objective=obj, iterations=it, converged=converged, history=history)


def reconstruction_error(z, k_class, k_vec_class, n: float) -> float:
    """``n - 2 z^T k + z^T K z``, the squared embedding residual (clamped at 0).

    ``n`` is the query's self-kernel (its order for projection kernels).
    """
    if isinstance(k_class, KernelMatrix):
        k_class = k_class.k
    if isinstance(k_vec_class, KernelVector):
        k_vec_class = k_vec_class.k
    z = np.atleast_1d(np.asarray(z, dtype=float))
    k_class = np.atleast_2d(np.asarray(k_class, dtype=float))
    k_vec_class = np.atleast_1d(np.asarray(k_vec_class, dtype=float))
    if k_class.shape != (z.size, z.size) or k_vec_class.size != z.size:
        raise DimensionMismatch(
            f"code length {z.size}, K {k_class.shape}, k {k_vec_class.shape} disagree"
        )
    err = float(n - 2.0 * z @ k_vec_class + z @ k_class @ z)
    if err < -1e-9 * max(1.0, abs(n)):
        # a genuinely negative squared norm means inconsistent kernels
        raise ArithmeticError(f"negative reconstruction error {err!r}")
    return max(err, 0.0)


@dataclass
class SrcResult:
    label: object
    errors: np.ndarray
    classes: list


def _parts_for(query, atoms) -> list:
    two_fold = hasattr(query, "sym_canon") and all(hasattr(a, "sym_canon") for a in atoms)
    return [SYMMETRIC, SKEW] if two_fold else [None]


def src_classify(
    query,
    atoms: Sequence,
    labels: Sequence,
    sparsity: float = DEFAULT_SPARSITY,
    kind: str = PROJECTION,
    sigma2: float = DEFAULT_SIGMA2,
    beta: float = 1.0,
    classes: Optional[Sequence] = None,
    kernel_cache: Optional[dict] = None,
) -> SrcResult:
    """Label by minimum class-restricted reconstruction error.

    Two-fold inputs are coded separately on their symmetric and skew parts and
    the two errors are summed. ``classes`` fixes the class order (ties go to
    the earliest); by default it is the order of first appearance in ``labels``.
    ``kernel_cache`` may map ``(class, part)`` to a precomputed atom Gram.
    """
    if len(atoms) != len(labels):
        raise DimensionMismatch("one label per atom is required")
    labels = list(labels)
    if classes is None:
        classes = list(dict.fromkeys(labels))
    if not classes:
        raise EmptyClass("no classes to choose from")
    parts = _parts_for(query, atoms)
    errors = np.zeros(len(classes))
    for ci, cls in enumerate(classes):
        members = [a for a, lab in zip(atoms, labels) if lab == cls]
        if not members:
            raise EmptyClass(f"class {cls!r} has no atoms")
        for part in parts:
            key = (cls, part)
            if kernel_cache is not None and key in kernel_cache:
                k_mat = kernel_cache[key]
            else:
                k_mat = kernel_matrix(members, kind, sigma2, beta, part).k
                if kernel_cache is not None:
                    kernel_cache[key] = k_mat
            k_vec = kernel_vector(query, members, kind, sigma2, beta, part).k
            code = solve_kernel_lasso(CodingProblem(k_mat, k_vec, sparsity))
            n_self = self_kernel(query, kind, beta, part)
            errors[ci] += reconstruction_error(code.z, k_mat, k_vec, n_self)
    best = int(np.argmin(errors))  # argmin returns the first minimum
    return SrcResult(label=classes[best], errors=errors, classes=list(classes))


def nn_martin_classify(query, references: Sequence, labels: Sequence):
    """Label of the reference at minimal Martin distance (first index on ties)."""
    if len(references) == 0:
        raise EmptyReferenceSet("nearest-neighbour classification needs references")
    if len(references) != len(labels):
        raise DimensionMismatch("one label per reference is required")
    d = np.array([martin_distance(query, ref) for ref in references])
    return labels[int(np.argmin(d))]
