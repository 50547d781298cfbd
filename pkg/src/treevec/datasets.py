"""Dataset file loading and splitting.

Line-delimited JSON throughout. Classification records carry
``{"id", "label", "source"}`` or ``{"id", "label", "ast"}`` (the AST
interchange schema); program tables are the same without labels; clone
pair records are ``{"id1", "id2", "label"}`` and reference a program
table.
"""

from __future__ import annotations

import json

import numpy as np

from .ast_core import import_ast_json
from .errors import DataFormatError, ParseError, SchemaError
from .minilang import parse_minilang
from .splitter import RootIdentifierSet, SubtreeSequence, split
from .training import ClassificationData, CloneData


def iter_jsonl(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                if not isinstance(record, dict):
                    raise DataFormatError(f"{path}:{lineno}: record must be an object")
                yield lineno, record
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc


def record_to_sequence(record, identifiers: RootIdentifierSet, granularity: str,
                       where: str = "record") -> SubtreeSequence:
    if "source" in record:
        try:
            ast = parse_minilang(record["source"])
        except ParseError as exc:
            raise DataFormatError(f"{where}: {exc}") from exc
    elif "ast" in record:
        try:
            ast = import_ast_json(record["ast"])
        except SchemaError as exc:
            raise DataFormatError(f"{where}: {exc}") from exc
    else:
        raise DataFormatError(f"{where}: record needs a 'source' or 'ast' field")
    return split(ast, identifiers, granularity)


def load_classification_file(path, identifiers: RootIdentifierSet,
                             granularity: str = "statement"):
    """Returns (samples, num_classes) where samples are (sequence, label)."""
    samples = []
    labels = []
    for lineno, record in iter_jsonl(path):
        where = f"{path}:{lineno}"
        if "label" not in record:
            raise DataFormatError(f"{where}: missing 'label'")
        label = record["label"]
        if not isinstance(label, int) or label < 0:
            raise DataFormatError(f"{where}: label must be a non-negative integer")
        seq = record_to_sequence(record, identifiers, granularity, where)
        samples.append((seq, label))
        labels.append(label)
    if not samples:
        raise DataFormatError(f"{path}: no records")
    return samples, max(labels) + 1


def load_program_table(path, identifiers: RootIdentifierSet,
                       granularity: str = "statement") -> dict[str, SubtreeSequence]:
    programs = {}
    for lineno, record in iter_jsonl(path):
        where = f"{path}:{lineno}"
        if "id" not in record:
            raise DataFormatError(f"{where}: missing 'id'")
        pid = str(record["id"])
        if pid in programs:
            raise DataFormatError(f"{where}: duplicate program id {pid!r}")
        programs[pid] = record_to_sequence(record, identifiers, granularity, where)
    if not programs:
        raise DataFormatError(f"{path}: no records")
    return programs


def load_pairs_file(path, programs) -> list[tuple[str, str, int]]:
    pairs = []
    for lineno, record in iter_jsonl(path):
        where = f"{path}:{lineno}"
        for key in ("id1", "id2", "label"):
            if key not in record:
                raise DataFormatError(f"{where}: missing {key!r}")
        a, b = str(record["id1"]), str(record["id2"])
        label = record["label"]
        if label not in (0, 1):
            raise DataFormatError(f"{where}: label must be 0 or 1")
        for pid in (a, b):
            if pid not in programs:
                raise DataFormatError(f"{where}: unknown program id {pid!r}")
        pairs.append((a, b, label))
    if not pairs:
        raise DataFormatError(f"{path}: no pairs")
    return pairs


def split_three(items, val_frac: float, test_frac: float, seed: int):
    """Disjoint train/val/test split with a seeded shuffle."""
    if val_frac < 0 or test_frac < 0 or val_frac + test_frac >= 1.0:
        raise DataFormatError("val and test fractions must be non-negative and sum below 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(items))
    n_val = int(round(len(items) * val_frac))
    n_test = int(round(len(items) * test_frac))
    val_idx = order[:n_val]
    test_idx = order[n_val:n_val + n_test]
    train_idx = order[n_val + n_test:]
    pick = lambda idx: [items[i] for i in idx]
    return pick(train_idx), pick(val_idx), pick(test_idx)


def build_classification_data(samples, num_classes: int, val_frac=0.2, test_frac=0.2,
                              seed: int = 42) -> ClassificationData:
    train, val, test = split_three(samples, val_frac, test_frac, seed)
    if not train:
        raise DataFormatError("training split is empty")
    return ClassificationData(train=train, val=val, test=test, num_classes=num_classes)


def build_clone_data(programs, pairs, val_frac=0.2, test_frac=0.2, seed: int = 42) -> CloneData:
    train, val, test = split_three(pairs, val_frac, test_frac, seed)
    if not train:
        raise DataFormatError("training split is empty")
    return CloneData(programs=programs, train=train, val=val, test=test)
