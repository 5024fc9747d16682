"""Command-line entry points.

Every command writes under ``--out``. Failures print one JSON object per line
on stderr (``{"error": <type>, "message": ..., ...}``) and exit nonzero.

Layout of an output directory::

    models/<id>.json        fitted models (fit)
    kernels/kernel.csv      Gram grid with a header row of ids (kernel)
    codes.csv               one row per model: id, symmetric codes, skew codes (encode)
    dict/dictionary.json    learned dictionary and dict/trace_<label>.csv (learn-dict)
    report.json, errors.csv classification report (classify, benchmark-synthetic)
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import LdsError
from .experiment import (
    CLASSIFIERS,
    NN_MARTIN,
    SRC,
    ExperimentConfig,
    RunReport,
    Timer,
    classify_all,
    fit_sequence,
    learn_class_dictionaries,
    run_benchmark,
)
from .io import (
    codes_csv,
    load_dictionary,
    load_manifest,
    load_model,
    save_dictionary,
    save_model,
    trace_csv,
)
from .kernels import HYBRID, PROJECTION, RBF_MARTIN, format_kernel_grid, kernel_matrix
from .learning import KMEANS, RANDOM, Dictionary, encode, learn
from .model import SKEW, SYMMETRIC, make_two_fold
from .synthetic import SyntheticConfig

PARTS = {"sym": SYMMETRIC, "skew": SKEW, "full": None}


def _error_line(exc: BaseException, **extra) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc), **extra})


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _exp_config(args) -> ExperimentConfig:
    fields = ExperimentConfig.__dataclass_fields__
    kw = {k: getattr(args, k) for k in fields if hasattr(args, k) and getattr(args, k) is not None}
    return ExperimentConfig(**kw)


def _load_models(paths, models_dir=None):
    files = [Path(p) for p in paths or []]
    if models_dir is not None:
        files += sorted(Path(models_dir).glob("*.json"))
    if not files:
        raise FileNotFoundError("no model files given")
    return [f.stem for f in files], [load_model(f) for f in files]


def _manifest_models(man, models_dir, split):
    entries = man.split(split)
    ids = [e.ident for e in entries]
    models = [load_model(Path(models_dir) / f"{i}.json") for i in ids]
    return ids, models, [e.label for e in entries]


def cmd_fit(args) -> int:
    man = load_manifest(args.manifest)
    out = _outdir(args) / "models"
    out.mkdir(exist_ok=True)
    fitted, failed = [], []
    for e in man.entries:
        try:
            model, _ = fit_sequence(man.sequences[e.ident], args.n, args.nv, args.sn_scale)
        except LdsError as exc:
            failed.append({"id": e.ident, "file": str(man.path(e)), "error": type(exc).__name__,
                           "message": str(exc)})
            print(_error_line(exc, path=str(man.path(e))), file=sys.stderr)
            continue
        save_model(model, out / f"{e.ident}.json")
        fitted.append(e.ident)
    report = {"fitted": fitted, "failed": failed}
    (out.parent / "fit_report.json").write_text(json.dumps(report, indent=1) + "\n")
    return 2 if failed else 0


def _items(models, part, kind):
    if part is None and kind != HYBRID:
        return models
    return [make_two_fold(m) for m in models]


def cmd_kernel(args) -> int:
    ids, models = _load_models(args.models, args.models_dir)
    part = PARTS[args.part]
    if args.kind == HYBRID and part is None:
        part = SYMMETRIC
    km = kernel_matrix(_items(models, part, args.kind), args.kind, args.sigma2, args.beta, part)
    out = _outdir(args) / "kernels"
    out.mkdir(exist_ok=True)
    (out / "kernel.csv").write_text(format_kernel_grid(km, ids))
    return 0


def cmd_encode(args) -> int:
    ids, models = _load_models(args.models, args.models_dir)
    dictionary = load_dictionary(args.dict)
    data = [make_two_fold(m) for m in models]
    codes = encode(data, dictionary, args.sparsity, args.beta)
    rows = np.hstack([codes.z_sym.T, codes.z_skew.T])
    (_outdir(args) / "codes.csv").write_text(codes_csv(ids, rows))
    return 0


def cmd_learn_dict(args) -> int:
    man = load_manifest(args.manifest)
    _, models, labels = _manifest_models(man, args.models_dir, "train")
    data = [make_two_fold(m) for m in models]
    cfg = _exp_config(args)
    out = _outdir(args) / "dict"
    out.mkdir(exist_ok=True)
    if args.per_class:
        dictionary, traces = learn_class_dictionaries(data, labels, cfg)
    else:
        dictionary, _, trace = learn(data, cfg.dl_config())
        traces = {"all": trace}
    save_dictionary(dictionary, out / "dictionary.json")
    for label, trace in traces.items():
        (out / f"trace_{label}.csv").write_text(trace_csv(trace))
    return 0


def _write_report(out: Path, report: RunReport, ids=None):
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=1, default=str) + "\n")
    if report.errors:
        ids = ids or [str(i) for i in range(len(report.errors))]
        (out / "errors.csv").write_text(codes_csv(ids, np.array(report.errors)))


def cmd_classify(args) -> int:
    man = load_manifest(args.manifest)
    cfg = _exp_config(args)
    timer = Timer()
    _, train_models, train_labels = _manifest_models(man, args.models_dir, "train")
    test_ids, test_models, truths = _manifest_models(man, args.models_dir, "test")
    with timer("code"):
        if cfg.classifier == NN_MARTIN:
            preds, errs = classify_all(test_models, train_models, train_labels, cfg, NN_MARTIN)
        else:
            queries = [make_two_fold(m) for m in test_models]
            if args.dict:
                d = load_dictionary(args.dict)
                atoms, labels = d.atom_pairs(), d.labels
            else:
                atoms, labels = [make_two_fold(m) for m in train_models], train_labels
            preds, errs = classify_all(queries, atoms, labels, cfg, SRC)
    report = RunReport(preds, truths, errs, dict(timer.totals), {"experiment": asdict(cfg)})
    _write_report(_outdir(args), report, test_ids)
    print(json.dumps({"accuracy": report.accuracy}))
    return 0


def cmd_benchmark_synthetic(args) -> int:
    cfg = _exp_config(args)
    syn = SyntheticConfig(
        n_classes=args.classes, n_train=args.train, n_test=args.test, m=args.m, n=cfg.n,
        nv=cfg.nv, tau=args.tau, separation=args.separation, spread=args.spread, seed=cfg.seed,
    )
    report = run_benchmark(cfg, syn)
    out = _outdir(args)
    _write_report(out, report)
    for label, trace in report.traces.items():
        (out / f"trace_{label}.csv").write_text(trace_csv(trace))
    print(json.dumps({"accuracy": report.accuracy}))
    return 0


def _common(p, *, model=False, coding=False, learning=False):
    p.add_argument("--out", default="out", help="output directory")
    if model:
        p.add_argument("--n", type=int, default=4, help="state dimension")
        p.add_argument("--nv", type=int, default=2, help="noise factor columns")
        p.add_argument("--sn-scale", dest="sn_scale", type=float, default=4.0)
    if coding:
        p.add_argument("--sparsity", type=float, default=0.1)
        p.add_argument("--kernel-kind", dest="kernel_kind", default=PROJECTION,
                       choices=[PROJECTION, RBF_MARTIN, HYBRID])
        p.add_argument("--sigma2", type=float, default=200.0)
        p.add_argument("--beta", type=float, default=1.0)
    if learning:
        p.add_argument("--j", type=int, default=4, help="atoms per family (per class)")
        p.add_argument("--init", default=KMEANS, choices=[KMEANS, RANDOM])
        p.add_argument("--max-outer-iters", dest="max_outer_iters", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ldsdict", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="identify and stabilize one model per sequence")
    p.add_argument("--manifest", required=True)
    _common(p, model=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("kernel", help="kernel grid between fitted models")
    p.add_argument("--models", nargs="*")
    p.add_argument("--models-dir")
    p.add_argument("--kind", default=PROJECTION, choices=[PROJECTION, RBF_MARTIN, HYBRID])
    p.add_argument("--part", default="full", choices=list(PARTS))
    p.add_argument("--sigma2", type=float, default=200.0)
    p.add_argument("--beta", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("encode", help="sparse codes of models against a dictionary")
    p.add_argument("--models", nargs="*")
    p.add_argument("--models-dir")
    p.add_argument("--dict", required=True)
    p.add_argument("--sparsity", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("classify", help="classify test entries of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--classifier", default=SRC, choices=[SRC, NN_MARTIN])
    p.add_argument("--dict", help="learned dictionary for SRC (default: training models)")
    _common(p, coding=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("learn-dict", help="learn a two-fold dictionary from training models")
    p.add_argument("--manifest", required=True)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--per-class", action="store_true", help="learn J atoms for each class")
    _common(p, coding=True, learning=True)
    p.set_defaults(func=cmd_learn_dict)

    p = sub.add_parser("benchmark-synthetic", help="end-to-end run on generated data")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--train", type=int, default=20, help="training sequences per class")
    p.add_argument("--test", type=int, default=10, help="test sequences per class")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--tau", type=int, default=60)
    p.add_argument("--separation", type=float, default=0.2)
    p.add_argument("--spread", type=float, default=0.3)
    p.add_argument("--classifier", default=NN_MARTIN, choices=list(CLASSIFIERS))
    _common(p, model=True, coding=True, learning=True)
    p.set_defaults(func=cmd_benchmark_synthetic)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LdsError, ValueError, OSError, KeyError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
