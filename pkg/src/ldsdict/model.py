"""LDS identification, stabilization and the two-fold (symmetric/skew) split."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from .errors import BadDims, NotStabilized, NotStructured, RankDeficient
from .numlin import (
    STRUCTURE_RTOL,
    skew_block_matrix,
    skew_canonical,
    skew_to_complex,
    sym_eig,
)

__all__ = [
    "Sequence",
    "LdsModel",
    "CanonicalAtom",
    "TwoFoldLds",
    "SYMMETRIC",
    "SKEW",
    "DEFAULT_SN_SCALE",
    "DEFAULT_NV",
    "identify",
    "stabilize_sn",
    "make_two_fold",
    "canonicalize",
    "simulate",
]

SYMMETRIC = "sym"
SKEW = "skew"
DEFAULT_SN_SCALE = 4.0
DEFAULT_NV = 2
# tanh saturates to exactly 1.0 in double precision around s*a > 38; keep
# soft-normalized singular values strictly inside the unit interval
SN_CEILING = 1.0 - 1e-9
RANK_RTOL = 1e-10


@dataclass(eq=False)
class Sequence:
    """Observations ``y`` of shape (m, tau); column t is y(t)."""

    y: np.ndarray
    label: Any = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 2 or self.y.shape[1] < 2:
            raise BadDims(f"sequence must be m x tau with tau >= 2, got {self.y.shape}")
        if not np.all(np.isfinite(self.y)):
            raise BadDims("sequence contains non-finite entries")

    @property
    def m(self) -> int:
        return self.y.shape[0]

    @property
    def tau(self) -> int:
        return self.y.shape[1]


@dataclass(eq=False)
class LdsModel:
    """Identified system ``x(t+1) = A x(t) + B v(t)``, ``y(t) = C x(t) + ybar``."""

    a: np.ndarray
    c: np.ndarray
    b: np.ndarray
    ybar: np.ndarray
    stable: bool = False
    sn_scale: Optional[float] = None

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.c.shape[0]

    @property
    def nv(self) -> int:
        return self.b.shape[1]


@dataclass(eq=False)
class CanonicalAtom:
    """Diagonalized system tuple.

    Symmetric kind: ``lam`` holds the real eigenvalues and ``basis`` the real
    orthonormal U. Skew kind: ``theta`` holds one rotation rate per plane and
    ``basis`` the real Q; the complex (Lambda, U) pair is built on demand.
    """

    kind: str
    basis: np.ndarray
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    odd_null: bool = False

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float).ravel()
        self.theta = np.asarray(self.theta, dtype=float).ravel()
        if self.kind == SYMMETRIC:
            if self.lam.size != self.basis.shape[1]:
                raise BadDims("symmetric atom needs one eigenvalue per basis column")
        elif self.kind == SKEW:
            if 2 * self.theta.size + int(self.odd_null) != self.basis.shape[1]:
                raise BadDims("skew atom needs floor(n/2) rates matching the basis")
        else:
            raise ValueError(f"unknown atom kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Complex eigenvalue list (length n)."""
        if self.kind == SYMMETRIC:
            return self.lam.astype(complex)
        return skew_to_complex(self.theta, self.basis, self.odd_null)[0]

    def complex_basis(self) -> np.ndarray:
        if self.kind == SYMMETRIC:
            return self.basis.astype(complex)
        return skew_to_complex(self.theta, self.basis, self.odd_null)[1]

    def as_system(self) -> tuple[np.ndarray, np.ndarray]:
        """Equivalent real (A, C) pair."""
        if self.kind == SYMMETRIC:
            return np.diag(self.lam), self.basis
        return skew_block_matrix(self.theta, self.odd_null), self.basis

    def copy(self) -> "CanonicalAtom":
        return replace(
            self, basis=self.basis.copy(), lam=self.lam.copy(), theta=self.theta.copy()
        )


@dataclass(eq=False)
class TwoFoldLds:
    a_sym: np.ndarray
    a_skew: np.ndarray
    c: np.ndarray
    sym_canon: CanonicalAtom
    skew_canon: CanonicalAtom
    h: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.c.shape[1]

    @property
    def m(self) -> int:
        return self.c.shape[0]

    def part(self, which: str) -> CanonicalAtom:
        return self.sym_canon if which == SYMMETRIC else self.skew_canon


def _largest_entry_positive(c: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(c), axis=0)
    return np.where(c[idx, np.arange(c.shape[1])] < 0, -1.0, 1.0)


def identify(seq, n: int, nv: int = DEFAULT_NV) -> LdsModel:
    """PCA-then-least-squares identification of an LDS of order ``n``.

    The state-noise factor ``b`` is the top-``nv`` square-root factor of the
    empirical covariance of the one-step state residuals.
    """
    y = seq.y if isinstance(seq, Sequence) else Sequence(seq).y
    m, tau = y.shape
    if n < 1 or n > min(m, tau - 1):
        raise BadDims(f"order n={n} must satisfy 1 <= n <= min(m={m}, tau-1={tau - 1})")
    if nv < 1 or nv > n:
        raise BadDims(f"nv={nv} must satisfy 1 <= nv <= n={n}")
    ybar = y.mean(axis=1)
    u, s, vt = np.linalg.svd(y - ybar[:, None], full_matrices=False)
    if s[n - 1] <= RANK_RTOL * s[0]:
        ratio = s[n - 1] / s[0] if s[0] > 0 else 0.0
        raise RankDeficient(f"centered sequence has numerical rank < {n} (s_n/s_1 = {ratio:.3g})")
    signs = _largest_entry_positive(u[:, :n])
    c = u[:, :n] * signs
    x = (s[:n, None] * vt[:n]) * signs[:, None]
    x0, x1 = x[:, :-1], x[:, 1:]
    a = x1 @ np.linalg.pinv(x0)

    resid = x1 - a @ x0
    cov = resid @ resid.T / max(resid.shape[1] - 1, 1)
    evals, evecs = np.linalg.eigh(0.5 * (cov + cov.T))
    order = np.argsort(evals)[::-1][:nv]
    b = evecs[:, order] * np.sqrt(np.clip(evals[order], 0.0, None))
    return LdsModel(a=a, c=c, b=b, ybar=ybar, stable=False)


def _sn_map(s: np.ndarray, a_scale: float) -> np.ndarray:
    # 2 * Sig(a s) - 1 == tanh(a s / 2), evaluated without cancellation
    return np.minimum(np.tanh(0.5 * a_scale * s), SN_CEILING)


def stabilize_sn(model: LdsModel, a_scale: float = DEFAULT_SN_SCALE) -> LdsModel:
    """Soft-normalize the transition matrix's singular values into [0, 1)."""
    if not a_scale > 0:
        raise ValueError(f"a_scale must be positive, got {a_scale}")
    u, s, vt = np.linalg.svd(model.a)
    a_new = (u * _sn_map(s, a_scale)) @ vt
    return replace(model, a=a_new, stable=True, sn_scale=float(a_scale))


def _canon_sym(a, c) -> CanonicalAtom:
    eig = sym_eig(a)
    return CanonicalAtom(SYMMETRIC, c @ eig.vectors, lam=eig.values)


def _canon_skew(a, c) -> CanonicalAtom:
    sc = skew_canonical(a)
    return CanonicalAtom(SKEW, c @ sc.q, theta=sc.theta, odd_null=sc.odd_null)


def canonicalize(a, c, kind: Optional[str] = None) -> CanonicalAtom:
    """Canonical tuple of a symmetric or skew-symmetric system (a, c).

    ``kind`` forces the branch; otherwise it is detected from ``a`` (the zero
    matrix, being both, is treated as symmetric).
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or a.shape != (c.shape[1], c.shape[1]):
        raise BadDims(f"a {a.shape} and c {c.shape} are inconsistent")
    if kind == SYMMETRIC:
        return _canon_sym(a, c)
    if kind == SKEW:
        return _canon_skew(a, c)
    tol = STRUCTURE_RTOL * (1.0 + np.linalg.norm(a))
    if np.linalg.norm(a - a.T) <= tol:
        return _canon_sym(a, c)
    if np.linalg.norm(a + a.T) <= tol:
        return _canon_skew(a, c)
    raise NotStructured("transition matrix is neither symmetric nor skew-symmetric")


def orthonormal_cov_factor(c: np.ndarray, b: np.ndarray) -> np.ndarray:
    """H = C B' with B' the orthonormal left singular factor of B."""
    ub, _, _ = np.linalg.svd(b, full_matrices=False)
    return c @ ub


def make_two_fold(model: LdsModel) -> TwoFoldLds:
    if not model.stable:
        raise NotStabilized("make_two_fold requires a stabilized model (run stabilize_sn)")
    a = model.a
    a_sym = 0.5 * (a + a.T)
    a_skew = 0.5 * (a - a.T)
    h = orthonormal_cov_factor(model.c, model.b) if model.b.size else None
    return TwoFoldLds(
        a_sym=a_sym,
        a_skew=a_skew,
        c=model.c,
        sym_canon=_canon_sym(a_sym, model.c),
        skew_canon=_canon_skew(a_skew, model.c),
        h=h,
    )


def simulate(
    model: LdsModel,
    tau: int,
    state_noise: float = 0.0,
    obs_noise: float = 0.0,
    seed: int = 0,
    label: Any = None,
) -> Sequence:
    if tau < 2:
        raise BadDims("tau must be at least 2")
    rng = np.random.default_rng(seed)
    n, m = model.n, model.m
    x = rng.standard_normal(n)
    y = np.empty((m, tau))
    for t in range(tau):
        y[:, t] = model.c @ x + model.ybar
        if obs_noise:
            y[:, t] += obs_noise * rng.standard_normal(m)
        x = model.a @ x
        if state_noise:
            x = x + state_noise * (model.b @ rng.standard_normal(model.nv))
    return Sequence(y, label=label)
