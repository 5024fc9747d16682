"""File formats: JSON documents for models, dictionaries and manifests; CSV for
sequences, kernel grids, traces and codes.

Model document fields: ``m, n, n_v, a, c, b, ybar, stable, sn_scale``
(matrices as lists of rows). Dictionary document: ``{"atoms": [...]}`` with per
atom ``sym`` and ``skew`` entries (``kind, lam | theta, odd_null, basis``),
optional ``h`` and ``label``. Manifest: ``{"root": ..., "entries": [{"file",
"label", "split"}], "m": optional}``.
"""
from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence as Seq

import numpy as np

from .errors import BadDims, EmptyClass, EmptyManifest
from .model import SKEW, SYMMETRIC, CanonicalAtom, LdsModel, Sequence

__all__ = [
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "dictionary_to_dict",
    "dictionary_from_dict",
    "save_dictionary",
    "load_dictionary",
    "read_sequence",
    "write_sequence",
    "ManifestEntry",
    "DatasetManifest",
    "load_manifest",
    "trace_csv",
    "codes_csv",
]


def _mat(x) -> list:
    return np.asarray(x, dtype=float).tolist()


def model_to_dict(model: LdsModel) -> dict:
    return {
        "m": model.m,
        "n": model.n,
        "n_v": model.nv,
        "a": _mat(model.a),
        "c": _mat(model.c),
        "b": _mat(model.b),
        "ybar": _mat(model.ybar),
        "stable": bool(model.stable),
        "sn_scale": model.sn_scale,
    }


def _shaped(values, shape) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(shape)
    return arr


def model_from_dict(doc: dict) -> LdsModel:
    m, n, nv = int(doc["m"]), int(doc["n"]), int(doc["n_v"])
    try:
        return LdsModel(
            a=_shaped(doc["a"], (n, n)),
            c=_shaped(doc["c"], (m, n)),
            b=_shaped(doc["b"], (n, nv)),
            ybar=_shaped(doc["ybar"], (m,)),
            stable=bool(doc.get("stable", False)),
            sn_scale=doc.get("sn_scale"),
        )
    except ValueError as exc:
        raise BadDims(f"model document has inconsistent shapes: {exc}") from exc


def save_model(model: LdsModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> LdsModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def _atom_to_dict(atom: CanonicalAtom) -> dict:
    doc = {"kind": atom.kind, "basis": _mat(atom.basis), "odd_null": atom.odd_null}
    if atom.kind == SYMMETRIC:
        doc["lam"] = _mat(atom.lam)
    else:
        doc["theta"] = _mat(atom.theta)
    return doc


def _atom_from_dict(doc: dict) -> CanonicalAtom:
    basis = np.asarray(doc["basis"], dtype=float)
    if doc["kind"] == SYMMETRIC:
        return CanonicalAtom(SYMMETRIC, basis, lam=doc["lam"])
    return CanonicalAtom(SKEW, basis, theta=doc["theta"], odd_null=bool(doc["odd_null"]))


def dictionary_to_dict(dictionary) -> dict:
    atoms = []
    for r, pair in enumerate(dictionary.atom_pairs()):
        doc = {"sym": _atom_to_dict(pair.sym_canon), "skew": _atom_to_dict(pair.skew_canon)}
        if pair.h is not None:
            doc["h"] = _mat(pair.h)
        if pair.label is not None:
            doc["label"] = pair.label
        atoms.append(doc)
    return {"atoms": atoms}


def dictionary_from_dict(doc: dict):
    from .learning import Dictionary

    atoms = doc["atoms"]
    hs = [np.asarray(a["h"], dtype=float) for a in atoms if "h" in a]
    labels = [a.get("label") for a in atoms]
    return Dictionary(
        [_atom_from_dict(a["sym"]) for a in atoms],
        [_atom_from_dict(a["skew"]) for a in atoms],
        hs if len(hs) == len(atoms) and atoms else None,
        labels if any(lab is not None for lab in labels) else None,
    )


def save_dictionary(dictionary, path) -> None:
    Path(path).write_text(json.dumps(dictionary_to_dict(dictionary)) + "\n")


def load_dictionary(path):
    return dictionary_from_dict(json.loads(Path(path).read_text()))


def read_sequence(path, label=None) -> Sequence:
    """Comma-separated m x tau matrix; row i is observation dimension i."""
    try:
        y = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise BadDims(f"{path}: not a numeric comma-separated matrix ({exc})") from exc
    return Sequence(y, label=label)


def write_sequence(seq: Sequence, path) -> None:
    np.savetxt(path, seq.y, delimiter=",", fmt="%.17g")


@dataclass
class ManifestEntry:
    file: str
    label: object
    split: str

    @property
    def ident(self) -> str:
        return Path(self.file).stem


@dataclass
class DatasetManifest:
    root: Path
    entries: list
    m: Optional[int] = None
    sequences: dict = field(default_factory=dict, repr=False)

    def split(self, which: str) -> list:
        return [e for e in self.entries if e.split == which]

    def path(self, entry: ManifestEntry) -> Path:
        return self.root / entry.file


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    """Parse and validate a manifest; every sequence is read once up front."""
    path = Path(path)
    doc = json.loads(path.read_text())
    entries = [
        ManifestEntry(str(e["file"]), e["label"], str(e.get("split", "train")))
        for e in doc.get("entries", [])
    ]
    if not entries:
        raise EmptyManifest(f"{path}: manifest has no entries")
    for e in entries:
        if e.split not in ("train", "test"):
            raise ValueError(f"{path}: split must be 'train' or 'test', got {e.split!r}")
    idents = [e.ident for e in entries]
    if len(set(idents)) != len(idents):
        raise ValueError(f"{path}: sequence file stems must be unique")
    root = Path(doc.get("root", "."))
    if not root.is_absolute():
        root = path.parent / root
    man = DatasetManifest(root, entries, doc.get("m"))
    test_labels = {e.label for e in man.split("test")}
    train_labels = {e.label for e in man.split("train")}
    missing = test_labels - train_labels
    if missing:
        raise EmptyClass(f"{path}: classes without training entries: {sorted(map(str, missing))}")
    if check_files:
        for e in entries:
            seq = read_sequence(man.path(e), label=e.label)
            if man.m is None:
                man.m = seq.m
            elif seq.m != man.m:
                raise BadDims(f"{man.path(e)}: has m={seq.m}, expected {man.m}")
            man.sequences[e.ident] = seq
    return man


def _csv(rows: Seq[Seq], header: Optional[Seq[str]] = None) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def trace_csv(trace) -> str:
    rows = [(i, float(v)) for i, v in enumerate(trace.objective_per_iter)]
    return _csv(rows, ["iteration", "objective"])


def codes_csv(ids: Seq[str], codes: np.ndarray, extra: Optional[np.ndarray] = None) -> str:
    """One row per query: identifier then the code entries (and optional extras)."""
    codes = np.atleast_2d(codes)
    rows = []
    for i, ident in enumerate(ids):
        vals = [float(v) for v in codes[i]]
        if extra is not None:
            vals += [float(v) for v in np.atleast_1d(extra[i])]
        rows.append([ident, *vals])
    return _csv(rows)
