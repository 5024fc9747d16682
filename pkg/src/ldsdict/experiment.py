"""End-to-end pipeline: identify, stabilize, split, then classify."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .coding import DEFAULT_SPARSITY, nn_martin_classify, src_classify
from .kernels import DEFAULT_SIGMA2, PROJECTION
from .learning import KMEANS, RANDOM, Dictionary, DlConfig, learn, random_init
from .model import DEFAULT_NV, DEFAULT_SN_SCALE, identify, make_two_fold, stabilize_sn
from .synthetic import SyntheticConfig, make_dataset

__all__ = [
    "NN_MARTIN",
    "SRC",
    "SRC_LEARNED",
    "SRC_RANDOM",
    "ExperimentConfig",
    "RunReport",
    "Timer",
    "fit_sequence",
    "fit_all",
    "learn_class_dictionaries",
    "random_class_dictionaries",
    "classify_all",
    "run_benchmark",
]

NN_MARTIN = "nn-martin"
SRC = "src"
SRC_LEARNED = "src-learned"
SRC_RANDOM = "src-random"
CLASSIFIERS = (NN_MARTIN, SRC, SRC_LEARNED, SRC_RANDOM)


@dataclass
class ExperimentConfig:
    n: int = 4
    nv: int = DEFAULT_NV
    sn_scale: float = DEFAULT_SN_SCALE
    sparsity: float = DEFAULT_SPARSITY
    sigma2: float = DEFAULT_SIGMA2
    beta: float = 1.0
    kernel_kind: str = PROJECTION
    classifier: str = SRC
    j: int = 4
    init: str = KMEANS
    max_outer_iters: int = 10
    seed: int = 0
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier must be one of {CLASSIFIERS}")

    def dl_config(self, seed: Optional[int] = None) -> DlConfig:
        return DlConfig(
            j=self.j,
            sparsity=self.sparsity,
            sn_scale=self.sn_scale,
            cov_weight=self.beta,
            max_outer_iters=self.max_outer_iters,
            seed=self.seed if seed is None else seed,
            init=self.init,
        )


@dataclass
class RunReport:
    predictions: list
    truths: list
    errors: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        if not self.truths:
            return float("nan")
        hits = sum(p == t for p, t in zip(self.predictions, self.truths))
        return hits / len(self.truths)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "predictions": list(self.predictions),
            "truths": list(self.truths),
            "errors": [list(map(float, e)) for e in self.errors],
            "timings": self.timings,
            "config": self.config,
        }


class Timer:
    """Accumulates wall-clock seconds per named stage."""

    def __init__(self):
        self.totals: dict = {}

    def __call__(self, stage: str):
        timer = self

        class _Span:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.totals[stage] = timer.totals.get(stage, 0.0) + time.perf_counter() - self.t0

        return _Span()


def fit_sequence(seq, n: int, nv: int = DEFAULT_NV, sn_scale: float = DEFAULT_SN_SCALE, timer=None):
    """Identified, stabilized model and its two-fold split."""
    timer = timer or Timer()
    with timer("identify"):
        model = identify(seq, n, nv)
    with timer("stabilize"):
        model = stabilize_sn(model, sn_scale)
        tf = make_two_fold(model)
    return model, tf


def fit_all(seqs, cfg: ExperimentConfig, timer=None):
    out = [fit_sequence(s, cfg.n, cfg.nv, cfg.sn_scale, timer) for s in seqs]
    return [m for m, _ in out], [t for _, t in out]


def _by_class(items, labels):
    classes = list(dict.fromkeys(labels))
    return classes, {c: [x for x, lab in zip(items, labels) if lab == c] for c in classes}


def learn_class_dictionaries(two_folds, labels, cfg: ExperimentConfig, seed=None):
    """One dictionary of ``cfg.j`` atoms per class, concatenated with labels."""
    classes, groups = _by_class(two_folds, labels)
    dicts, traces = [], {}
    for c in classes:
        dcfg = cfg.dl_config(seed)
        dcfg.j = min(dcfg.j, len(groups[c]))
        d, _, trace = learn(groups[c], dcfg)
        d.labels = [c] * d.j
        dicts.append(d)
        traces[c] = trace
    return Dictionary.concatenate(dicts), traces


def random_class_dictionaries(two_folds, labels, cfg: ExperimentConfig, seed=None) -> Dictionary:
    classes, groups = _by_class(two_folds, labels)
    dicts = []
    for c in classes:
        dcfg = cfg.dl_config(seed)
        dcfg.j = min(dcfg.j, len(groups[c]))
        dcfg.init = RANDOM
        d = random_init(groups[c], dcfg)
        d.labels = [c] * d.j
        dicts.append(d)
    return Dictionary.concatenate(dicts)


def classify_all(queries, atoms, atom_labels, cfg: ExperimentConfig, classifier: str):
    """Predictions (and per-class errors for SRC) for a batch of queries."""
    preds, errs = [], []
    if classifier == NN_MARTIN:
        for q in queries:
            preds.append(nn_martin_classify(q, atoms, atom_labels))
        return preds, errs
    classes = list(dict.fromkeys(atom_labels))
    cache: dict = {}
    for q in queries:
        res = src_classify(
            q, atoms, atom_labels, cfg.sparsity, cfg.kernel_kind, cfg.sigma2, cfg.beta,
            classes=classes, kernel_cache=cache,
        )
        preds.append(res.label)
        errs.append(res.errors)
    return preds, errs


def run_benchmark(cfg: ExperimentConfig, syn: SyntheticConfig) -> RunReport:
    timer = Timer()
    train, test, _ = make_dataset(syn)
    train_models, train_tf = fit_all(train, cfg, timer)
    test_models, test_tf = fit_all(test, cfg, timer)
    train_labels = [s.label for s in train]
    truths = [s.label for s in test]
    traces = {}
    if cfg.classifier == NN_MARTIN:
        with timer("code"):
            preds, errs = classify_all(test_models, train_models, train_labels, cfg, NN_MARTIN)
    else:
        atoms, labels = train_tf, train_labels
        if cfg.classifier in (SRC_LEARNED, SRC_RANDOM):
            with timer("learn"):
                if cfg.classifier == SRC_LEARNED:
                    d, traces = learn_class_dictionaries(train_tf, train_labels, cfg)
                else:
                    d = random_class_dictionaries(train_tf, train_labels, cfg)
            atoms, labels = d.atom_pairs(), d.labels
        with timer("code"):
            preds, errs = classify_all(test_tf, atoms, labels, cfg, SRC)
    return RunReport(
        predictions=preds,
        truths=truths,
        errors=errs,
        timings=dict(timer.totals),
        config={"experiment": asdict(cfg), "synthetic": asdict(syn)},
        traces=traces,
    )
