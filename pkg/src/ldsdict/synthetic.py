"""Synthetic class-structured LDS data for desk-scale experiments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LdsModel, Sequence, simulate

__all__ = [
    "SyntheticConfig",
    "random_orthonormal",
    "random_stable",
    "class_generators",
    "perturb",
    "make_dataset",
]


@dataclass
class SyntheticConfig:
    n_classes: int = 3
    n_train: int = 20
    n_test: int = 10
    m: int = 10
    n: int = 4
    nv: int = 2
    tau: int = 60
    # class measurement subspaces are perturbations of one shared base; larger
    # separation means more distinct classes (inf: independent random subspaces)
    separation: float = 0.2
    # within-class perturbation of each sequence's generator (C and A)
    spread: float = 0.3
    state_noise: float = 1.0
    obs_noise: float = 0.1
    radius_range: tuple = (0.3, 0.8)
    seed: int = 0


def _orth(x: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(x)
    return q * np.sign(np.diag(r))


def random_orthonormal(m: int, n: int, rng) -> np.ndarray:
    return _orth(rng.standard_normal((m, n)))


def random_stable(n: int, rng, radius_range=(0.3, 0.8)) -> np.ndarray:
    """Random matrix rescaled to a spectral radius drawn from ``radius_range``."""
    a = rng.standard_normal((n, n))
    rho = np.max(np.abs(np.linalg.eigvals(a)))
    return a * (rng.uniform(*radius_range) / rho)


def class_generators(cfg: SyntheticConfig, rng) -> list:
    gens = []
    base = random_orthonormal(cfg.m, cfg.n, rng)
    for _ in range(cfg.n_classes):
        c = random_orthonormal(cfg.m, cfg.n, rng)
        if np.isfinite(cfg.separation):
            c = _orth(base + cfg.separation * c)
        a = random_stable(cfg.n, rng, cfg.radius_range)
        b = random_orthonormal(cfg.n, cfg.nv, rng)
        gens.append(LdsModel(a=a, c=c, b=b, ybar=rng.standard_normal(cfg.m), stable=True))
    return gens


def perturb(gen: LdsModel, spread: float, rng, max_radius: float = 0.95) -> LdsModel:
    if spread == 0:
        return gen
    c = _orth(gen.c + spread * rng.standard_normal(gen.c.shape) / np.sqrt(gen.m))
    a = gen.a + spread * rng.standard_normal(gen.a.shape) / np.sqrt(gen.n)
    rho = np.max(np.abs(np.linalg.eigvals(a)))
    if rho > max_radius:
        a *= max_radius / rho
    return LdsModel(a=a, c=c, b=gen.b, ybar=gen.ybar, stable=True)


def make_dataset(cfg: SyntheticConfig):
    """Returns ``(train, test, generators)``; sequences carry integer labels."""
    rng = np.random.default_rng(cfg.seed)
    gens = class_generators(cfg, rng)
    train, test = [], []
    for label, gen in enumerate(gens):
        for split, count in ((train, cfg.n_train), (test, cfg.n_test)):
            for _ in range(count):
                model = perturb(gen, cfg.spread, rng)
                seed = int(rng.integers(2**31))
                split.append(
                    simulate(model, cfg.tau, cfg.state_noise, cfg.obs_noise, seed, label=label)
                )
    return train, test, gens
