"""
Model documents and CSV input/output.

A model document is a JSON object::

    {
      "version": 1,
      "d": 3,
      "column_names": ["a", "b", "c"],
      "truncation": 2,
      "marginals": [[...sorted values...], ...],
      "trees": [[{"conditioned": [0, 1], "conditioning": [],
                  "family": "Clayton", "theta": "1.7"}, ...], ...]
    }

``theta`` is written as the ``repr`` of the float so it reads back
bit-for-bit; marginal values are plain JSON numbers, which Python also
round-trips exactly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import StructureError
from .marginals import MarginalModel
from .vine import deserialize, serialize

SCHEMA_VERSION = 1


class DataFileError(ValueError):
    """A CSV file could not be parsed; the message names row and column."""


@dataclass(frozen=True, eq=False)
class FittedModel:
    structure: object
    marginals: list
    column_names: list

    @property
    def d(self):
        return self.structure.d


def to_document(model):
    doc = serialize(model.structure)
    return {
        "version": SCHEMA_VERSION,
        "d": model.d,
        "column_names": list(model.column_names),
        "truncation": model.structure.truncation,
        "marginals": [m.sorted_values.tolist() for m in model.marginals],
        "trees": doc["trees"],
    }


def from_document(doc):
    """Rebuild a :class:`FittedModel`; errors carry a JSON path."""
    if not isinstance(doc, dict):
        raise StructureError("$: expected an object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise StructureError(f"$.version: unsupported schema version {version!r}, "
                             f"expected {SCHEMA_VERSION}")
    structure = deserialize({"d": doc.get("d"), "trees": doc.get("trees")})
    if doc.get("truncation") != structure.truncation:
        raise StructureError(f"$.truncation: {doc.get('truncation')!r} does not match "
                             f"the {structure.truncation} stored trees")
    if not structure.is_fitted:
        raise StructureError("$.trees: every edge needs a family and theta")
    names = doc.get("column_names")
    if (not isinstance(names, list) or len(names) != structure.d
            or not all(isinstance(x, str) for x in names)):
        raise StructureError(f"$.column_names: expected {structure.d} strings")
    raw = doc.get("marginals")
    if not isinstance(raw, list) or len(raw) != structure.d:
        raise StructureError(f"$.marginals: expected {structure.d} value arrays")
    marginals = []
    for j, values in enumerate(raw):
        try:
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise ValueError("values must be a flat list of finite numbers")
            marginals.append(MarginalModel(arr))
        except (TypeError, ValueError) as exc:
            raise StructureError(f"$.marginals[{j}]: {exc}") from None
    return FittedModel(structure, marginals, names)


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_document(model), fh, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StructureError(f"{path}: not valid JSON ({exc})") from None
    return from_document(doc)


def read_csv(path):
    """
    Read a comma-separated numeric table with a header row.

    Returns ``(column_names, data)``.  Blank or non-numeric cells raise
    :class:`DataFileError` naming the 1-based file line and the column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFileError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFileError(f"{path}:{line_no}: expected {len(header)} fields, "
                                    f"got {len(row)}")
            values = []
            for name, cell in zip(header, row):
                cell = cell.strip()
                if not cell:
                    raise DataFileError(f"{path}:{line_no}: blank cell in column {name!r}")
                try:
                    val = float(cell)
                except ValueError:
                    raise DataFileError(f"{path}:{line_no}: non-numeric value {cell!r} "
                                        f"in column {name!r}") from None
                if not math.isfinite(val):
                    raise DataFileError(f"{path}:{line_no}: non-finite value in column {name!r}")
                values.append(val)
            rows.append(values)
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def write_csv(path, column_names, data):
    data = np.asarray(data, dtype=float).reshape(-1, len(column_names))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(column_names)
        for row in data:
            writer.writerow([repr(float(x)) for x in row])
