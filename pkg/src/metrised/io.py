"""JSON algebra files.

Layout::

    {"schema_version": 1, "label": "...", "dim": n,
     "structure": [n**3 floats, row-major C[i][j][k]],
     "gram": [n**2 floats, row-major], "metadata": {...}}

Python's float repr round-trips exactly, so ``load(save(A)) == A``.
"""
from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np

from .algebra import AlgebraSpec

SCHEMA_VERSION = 1


class AlgebraFileError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def to_dict(A: AlgebraSpec, metadata: Optional[dict] = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "label": A.label,
        "dim": A.dim,
        "structure": [float(v) for v in A.structure.reshape(-1)],
        "gram": [float(v) for v in A.gram.reshape(-1)],
        "metadata": dict(metadata or {}),
    }


def dumps(A: AlgebraSpec, metadata: Optional[dict] = None) -> str:
    return json.dumps(to_dict(A, metadata), indent=1) + "\n"


def save(A: AlgebraSpec, path, metadata: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(A, metadata))


def _numbers(data: dict, key: str, count: int) -> np.ndarray:
    if key not in data:
        raise AlgebraFileError(key, "missing")
    values = data[key]
    if not isinstance(values, list):
        raise AlgebraFileError(key, "expected a flat list of numbers")
    if len(values) != count:
        raise AlgebraFileError(key, f"expected {count} entries, got {len(values)}")
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise AlgebraFileError(key, f"non-numeric entry ({exc})") from None
    if not np.all(np.isfinite(arr)):
        raise AlgebraFileError(key, "non-finite entry")
    return arr


def from_dict(data: dict) -> AlgebraSpec:
    """Build the algebra described by ``data``, symmetrizing ``C`` in its first two indices.

    An asymmetric input triggers :class:`metrised.algebra.AsymmetryWarning`.
    """
    if not isinstance(data, dict):
        raise AlgebraFileError("document", "expected a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise AlgebraFileError("schema_version", f"unsupported value {version!r}")
    n = data.get("dim")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise AlgebraFileError("dim", f"expected a positive integer, got {n!r}")
    label = data.get("label", "")
    if not isinstance(label, str):
        raise AlgebraFileError("label", "expected a string")
    C = _numbers(data, "structure", n ** 3).reshape(n, n, n)
    G = _numbers(data, "gram", n * n).reshape(n, n)
    meta = data.get("metadata", {})
    if not isinstance(meta, dict):
        raise AlgebraFileError("metadata", "expected an object")
    return AlgebraSpec(C, G, label).symmetrized()


def loads(text: str) -> AlgebraSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AlgebraFileError("document", f"invalid JSON ({exc})") from None
    return from_dict(data)


def load(path) -> AlgebraSpec:
    if not os.path.exists(path):
        raise AlgebraFileError("path", f"{path} does not exist")
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
