"""Dataset, query-class and report files.

Datasets are plain text with one record per line: an integer element id for
discrete domains, or comma-separated decimals for point clouds. Blank lines
and lines starting with ``#`` are skipped. Query classes and reports are
JSON documents.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..core import ExplicitClass, HalfspaceClass, IntervalClass, Predicate
from ..errors import InvalidInputError

REPORT_SCHEMA_VERSION = 1


def _records(path):
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"{path}: no such file")
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if text and not text.startswith("#"):
                yield lineno, text


def read_discrete_dataset(path) -> list[int]:
    out = []
    for lineno, text in _records(path):
        try:
            out.append(int(text))
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: expected an integer element id, got {text!r}") from None
    if not out:
        raise InvalidInputError(f"{path}: dataset is empty")
    return out


def read_point_cloud(path) -> np.ndarray:
    rows = []
    width = None
    for lineno, text in _records(path):
        try:
            row = [float(tok) for tok in text.split(",")]
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: expected comma-separated decimals, got {text!r}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InvalidInputError(f"{path}:{lineno}: expected {width} coordinates, got {len(row)}")
        rows.append(row)
    if not rows:
        raise InvalidInputError(f"{path}: dataset is empty")
    return np.asarray(rows)


def write_discrete_dataset(path, records) -> None:
    atomic_write(path, "".join(f"{int(r)}\n" for r in records))


def write_point_cloud(path, points) -> None:
    atomic_write(path, "".join(",".join(repr(float(v)) for v in row) + "\n" for row in np.asarray(points)))


def parse_query_spec(doc: dict):
    kind = doc.get("kind")
    if kind == "explicit":
        preds = doc.get("predicates") or []
        if not preds:
            raise InvalidInputError("explicit query spec needs a non-empty 'predicates' list")
        size = doc.get("universe_size", len(preds[0]))
        bad = [p for p in preds if len(p) != size]
        if bad:
            raise InvalidInputError(f"predicate {bad[0]!r} does not have length {size}")
        return ExplicitClass.from_predicates([Predicate.from_string(p) for p in preds])
    if kind == "intervals":
        return IntervalClass(int(doc["d"]))
    if kind == "halfspaces":
        return HalfspaceClass(int(doc["d"]), float(doc["gamma"]))
    raise InvalidInputError(f"unknown query class kind {kind!r}")


def query_spec(qclass) -> dict:
    if isinstance(qclass, ExplicitClass):
        return {"kind": "explicit", "universe_size": qclass.universe_size,
                "predicates": [p.to_string() for p in qclass]}
    if isinstance(qclass, IntervalClass):
        return {"kind": "intervals", "d": qclass.d}
    return {"kind": "halfspaces", "d": qclass.d, "gamma": qclass.gamma}


def read_query_spec(path):
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"{path}: no such file")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}:{exc.lineno}: malformed query spec ({exc.msg})") from None
    try:
        return parse_query_spec(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{path}: {exc}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_report(path, doc: dict) -> str:
    doc = {"schema_version": REPORT_SCHEMA_VERSION, **doc}
    text = dumps(doc)
    if path is not None:
        atomic_write(path, text)
    return text
