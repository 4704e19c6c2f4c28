"""Reading and writing datasets, label files and cost matrices.

Datasets are JSON lines, one object per line::

    {"id": "a", "weight": 1, "dists": [{"supports": [[0.0, 1.0]], "probs": [1.0]}]}

Symbolic datasets start with a header line ``{"alphabet": ["A", "R", ...]}``
and list supports as integer indices into that alphabet.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import DataObject, GroundMetric, ValidationError, WeightedDataset, validate_dataset

__all__ = [
    "ground_from_matrix_file", "pam_convert", "read_dataset", "read_labels", "read_matrix",
    "write_dataset", "write_labels", "write_matrix",
]


def _dist_record(d) -> dict:
    sup = d.supports.tolist()
    return {"supports": sup, "probs": d.probs.tolist()}


def write_dataset(path: str | Path, objects: Sequence[DataObject], weights=None,
                  alphabet: Sequence[str] | None = None) -> None:
    w = np.ones(len(objects)) if weights is None else np.asarray(weights, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        if alphabet is not None:
            fh.write(json.dumps({"alphabet": list(alphabet)}) + "\n")
        for o, wi in zip(objects, w):
            rec = {"id": o.id, "weight": float(wi), "dists": [_dist_record(d) for d in o.dists]}
            fh.write(json.dumps(rec) + "\n")


def read_dataset(path: str | Path) -> tuple[WeightedDataset, list[str] | None]:
    """Parse and validate a dataset file; returns ``(dataset, alphabet)``."""
    alphabet = None
    raw = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise ValidationError(f"{path}:{lineno}: expected a JSON object")
            if "alphabet" in rec:
                if raw or alphabet is not None:
                    raise ValidationError(f"{path}:{lineno}: alphabet header must come first")
                alphabet = [str(a) for a in rec["alphabet"]]
                continue
            if "dists" not in rec:
                raise ValidationError(f"{path}:{lineno}: record has no 'dists'")
            raw.append(rec)
    data = validate_dataset(raw, alphabet_size=None if alphabet is None else len(alphabet))
    return data, alphabet


def write_labels(path: str | Path, ids: Sequence[str], labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for oid, lab in zip(ids, labels):
            fh.write(f"{oid}\t{int(lab)}\n")


def read_labels(path: str | Path, ids: Sequence[str] | None = None) -> np.ndarray:
    """Labels in file order, or aligned to ``ids`` when given."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").rsplit("\t", 1)
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 'id<TAB>label'")
            try:
                pairs.append((parts[0], int(parts[1])))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: label is not an integer") from None
    if ids is None:
        return np.array([lab for _, lab in pairs], dtype=np.int64)
    lookup = dict(pairs)
    missing = [i for i in ids if i not in lookup]
    if missing:
        raise ValidationError(f"{path}: no label for id {missing[0]!r}")
    return np.array([lookup[i] for i in ids], dtype=np.int64)


def read_matrix(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Symbol header line followed by one whitespace-separated row per symbol."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty matrix file")
    symbols = lines[0]
    rows = lines[1:]
    if len(rows) != len(symbols) or any(len(r) != len(symbols) for r in rows):
        raise ValidationError(f"{path}: expected a {len(symbols)}x{len(symbols)} matrix")
    try:
        m = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return symbols, m


def write_matrix(path: str | Path, symbols: Sequence[str], matrix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(" ".join(symbols) + "\n")
        for row in np.asarray(matrix):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def ground_from_matrix_file(path: str | Path, alphabet: Sequence[str] | None = None) -> GroundMetric:
    """Load a cost matrix, reordered to ``alphabet`` when one is given."""
    symbols, m = read_matrix(path)
    if alphabet is not None:
        pos = {s: i for i, s in enumerate(symbols)}
        unknown = [a for a in alphabet if a not in pos]
        if unknown:
            raise ValidationError(f"{path}: no row for symbol {unknown[0]!r}")
        order = [pos[a] for a in alphabet]
        m = m[np.ix_(order, order)]
        symbols = list(alphabet)
    return GroundMetric.from_matrix(m, symbols)


def pam_convert(prob) -> np.ndarray:
    """Turn mutation probabilities ``prob[a, b] = P(a | b)`` into distances.

    ``D(a, b) = -(log P(a|b) + log P(b|a))`` shifted by the smallest diagonal
    entry so the diagonal minimum is zero; remaining diagonal entries are set
    to zero as a ground metric requires.
    """
    p = np.asarray(prob, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError(f"mutation matrix must be square, got {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
        raise ValidationError("mutation probabilities must lie in (0, 1]")
    lp = np.log(p)
    d = -(lp + lp.T)
    d = d - np.diag(d).min()
    np.fill_diagonal(d, 0.0)
    if np.any(d < 0):
        i, j = np.unravel_index(np.argmin(d), d.shape)
        raise ValidationError(
            f"pair ({i}, {j}) is closer than the nearest self-pair; "
            "the converted matrix would have a negative distance")
    return d
