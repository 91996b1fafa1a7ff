"""FeatureVector dataset IO and design-matrix construction.

Datasets travel as CSV (one row per patient, schema-ordered columns, label and
subgroup columns) with a JSON manifest alongside. Floats are written with
repr() so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json

import numpy as np

from .core_data import AGE_BINS, FeatureSchema, FeatureVector, SUBGROUPS
from .errors import ValidationError

_META_COLUMNS = ("patient_id", "label", "subgroup", "age_bin")


def _format_value(descriptor, x: float) -> str:
    if descriptor.kind == "continuous":
        return repr(float(x))
    if descriptor.kind == "binary":
        return str(int(x))
    return descriptor.levels[int(x)]


def write_vectors_csv(path: str, vectors: list[FeatureVector], schema: FeatureSchema) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(_META_COLUMNS) + list(schema.names))
        for v in vectors:
            row = [v.patient_id, str(v.label), v.subgroup, v.age_bin]
            row.extend(_format_value(f, x) for f, x in zip(schema.features, v.values))
            writer.writerow(row)


def read_vectors_csv(path: str, schema: FeatureSchema) -> list[FeatureVector]:
    vectors: list[FeatureVector] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in (*_META_COLUMNS, *schema.names) if c not in header]
        if missing:
            raise ValidationError(f"dataset {path} missing columns: {missing}")
        sex_idx = None
        try:
            sex_idx = schema.index_of("sex")
        except KeyError:
            pass
        for row in reader:
            values = []
            for f in schema.features:
                raw = row[f.name]
                if f.kind == "categorical":
                    if raw not in f.levels:
                        raise ValidationError(f"{row['patient_id']}: bad {f.name} {raw!r}")
                    values.append(float(f.levels.index(raw)))
                else:
                    values.append(float(raw))
            subgroup = row["subgroup"]
            age_bin = row["age_bin"]
            if subgroup not in SUBGROUPS:
                raise ValidationError(f"{row['patient_id']}: unknown subgroup {subgroup!r}")
            if age_bin not in AGE_BINS:
                raise ValidationError(f"{row['patient_id']}: unknown age bin {age_bin!r}")
            sex_bin = int(values[sex_idx]) if sex_idx is not None else 0
            vectors.append(
                FeatureVector(
                    patient_id=row["patient_id"],
                    label=int(row["label"]),
                    subgroup=subgroup,
                    age_bin=age_bin,
                    sex_bin=sex_bin,
                    values=tuple(values),
                )
            )
    return vectors


def design_matrix(
    vectors: list[FeatureVector], schema: FeatureSchema
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """(X, y, subgroups) with categoricals expanded to non-reference dummies.

    X columns follow schema.expanded_columns(); continuous values stay in raw
    clinical units (standardization is the model's job).
    """
    n = len(vectors)
    cols = schema.expanded_columns()
    X = np.zeros((n, len(cols)))
    y = np.zeros(n, dtype=np.int64)
    subgroups: list[str] = []
    for i, v in enumerate(vectors):
        if len(v.values) != len(schema):
            raise ValidationError(
                f"{v.patient_id}: {len(v.values)} values for {len(schema)} features"
            )
        j = 0
        for f, x in zip(schema.features, v.values):
            if f.kind == "categorical":
                level = f.levels[int(x)]
                for lv in f.levels:
                    if lv == f.reference:
                        continue
                    X[i, j] = 1.0 if lv == level else 0.0
                    j += 1
            else:
                X[i, j] = x
                j += 1
        y[i] = v.label
        subgroups.append(v.subgroup)
    return X, y, subgroups


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: str, payload: dict) -> None:
    """Deterministic JSON: sorted keys, no whitespace variance, trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def dataset_manifest(vectors: list[FeatureVector], **extra) -> dict:
    counts = {"total": len(vectors), "positives": sum(v.label for v in vectors)}
    counts["negatives"] = counts["total"] - counts["positives"]
    return {"counts": counts, **extra}
