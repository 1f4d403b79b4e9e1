"""
Matrix Codec
============

JSON exchange format for cone elements: an array of rows, complex entries
written as two-element arrays [re, im].
"""

import json
from pathlib import Path

import numpy as np

from app.core.cone import ConeElement
from app.core.errors import DomainError


def decode_matrix(rows, d: int = 1) -> ConeElement:
    """Build a ConeElement from nested lists (entries may be [re, im] pairs)."""
    if not isinstance(rows, list) or not rows or not all(isinstance(row, list) for row in rows):
        raise DomainError("matrix must be a non-empty JSON array of rows")

    def entry(value):
        if isinstance(value, list):
            if len(value) != 2:
                raise DomainError(f"complex entries must be [re, im] pairs (got {value!r})")
            return complex(float(value[0]), float(value[1]))
        return float(value)

    try:
        values = np.array([[entry(v) for v in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise DomainError(f"matrix entries must be numbers: {exc}")
    return ConeElement(values, d)


def encode_matrix(x) -> list:
    """Inverse of decode_matrix; real matrices stay plain numbers."""
    entries = x.entries if isinstance(x, ConeElement) else np.asarray(x)
    if np.iscomplexobj(entries):
        return [[[float(v.real), float(v.imag)] for v in row] for row in entries]
    return [[float(v) for v in row] for row in entries]


def load_matrix(path, d: int = 1) -> ConeElement:
    path = Path(path)
    try:
        rows = json.loads(path.read_text())
    except FileNotFoundError:
        raise DomainError(f"matrix file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DomainError(f"matrix file {path} is not valid JSON: {exc}")
    return decode_matrix(rows, d)
