"""Modeling-dataset construction: index events, one-year windowed aggregation,
deterministic patient-ID splits, exact matching, and prevalence adjustment."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .core_data import (
    COHORT_MASLD,
    COHORT_NON_MASLD,
    CodeList,
    FeatureSchema,
    FeatureVector,
    PatientRecord,
    cap_value,
    derive_demographics,
)
from .errors import InsufficientDataError, ValidationError

WINDOW_DAYS = 365  # lookback window, inclusive on both ends


@dataclass(frozen=True)
class IndexEvent:
    patient_id: str
    date: date
    kind: str  # first_masld_dx | first_exam


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, float, float] = (0.70, 0.15, 0.15)
    seed: int = 20240501

    def __post_init__(self) -> None:
        if any(f <= 0 for f in self.fractions):
            raise ValidationError("split fractions must be positive")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValidationError(f"split fractions sum to {sum(self.fractions)}, not 1")


@dataclass
class MatchedCohort:
    masld: list[FeatureVector]
    non_masld: list[FeatureVector]
    match_keys: tuple[str, ...]
    shortfalls: dict = field(default_factory=dict)  # cell -> missing control count


def find_index_event(
    record: PatientRecord,
    cohort_label: str,
    masld_codes: CodeList,
    exam_codes: CodeList,
) -> IndexEvent:
    """Earliest dated qualifying diagnosis: MASLD code for cases, exam code for controls."""
    if cohort_label == COHORT_MASLD:
        codes, kind = masld_codes, "first_masld_dx"
    elif cohort_label == COHORT_NON_MASLD:
        codes, kind = exam_codes, "first_exam"
    else:
        raise ValidationError(f"no index event for cohort {cohort_label!r}")
    dates = [d.date for d in record.diagnoses if d.date is not None and codes.matches(d.code)]
    if not dates:
        raise ValidationError(f"{record.patient_id}: no dated qualifying code for {kind}")
    return IndexEvent(patient_id=record.patient_id, date=min(dates), kind=kind)


def window_and_aggregate(
    record: PatientRecord,
    index_event: IndexEvent,
    schema: FeatureSchema,
    label: int = 0,
) -> FeatureVector | None:
    """Aggregate one patient into a FeatureVector, or None when unusable.

    Continuous features take the median of capped in-window (index-365d ..
    index, inclusive) lab/vital values; any continuous feature with zero
    in-window observations makes the whole row missing. Diagnosis flags use
    ever-diagnosed semantics with no window. None is also returned for
    unknown sex (excluded from modeling) — never for missing diagnoses.
    """
    if index_event.patient_id != record.patient_id:
        raise ValidationError("index event does not belong to this record")
    lo = index_event.date - timedelta(days=WINDOW_DAYS)
    hi = index_event.date

    age_bin, subgroup, sex_bin = derive_demographics(record, index_event.date)
    if sex_bin is None:
        return None

    observations = list(record.labs) + list(record.vitals)
    values: list[float] = []
    for f in schema.features:
        if f.kind == "continuous":
            in_window = sorted(
                cap_value(f.name, m.value, schema)
                for m in observations
                if m.date is not None and lo <= m.date <= hi and f.matches_code(m.code)
            )
            if not in_window:
                return None
            k = len(in_window)
            if k % 2:
                med = in_window[k // 2]
            else:
                med = 0.5 * (in_window[k // 2 - 1] + in_window[k // 2])
            values.append(med)
        elif f.kind == "binary":
            if f.source == "sex":
                values.append(float(sex_bin))
            else:
                ever = any(f.matches_code(d.code) for d in record.diagnoses)
                values.append(1.0 if ever else 0.0)
        else:  # categorical
            if f.source == "subgroup":
                values.append(float(f.levels.index(subgroup)))
            elif f.source == "age_bin":
                values.append(float(f.levels.index(age_bin)))
            else:
                raise ValidationError(f"categorical feature {f.name} needs a demographic source")
    return FeatureVector(
        patient_id=record.patient_id,
        label=label,
        subgroup=subgroup,
        age_bin=age_bin,
        sex_bin=sex_bin,
        values=tuple(values),
    )


def _split_unit(patient_id: str, seed: int) -> float:
    """Stable hash of (seed, patient_id) mapped into [0, 1)."""
    digest = hashlib.sha256(f"{seed}:{patient_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def split_dataset(
    vectors: list[FeatureVector], spec: SplitSpec
) -> tuple[list[FeatureVector], list[FeatureVector], list[FeatureVector]]:
    """Disjoint, exhaustive train/validate/test partition by hashed patient ID.

    Purely a function of (patient_id, seed): membership never depends on row
    order or on which other patients are present.
    """
    t, v, _ = spec.fractions
    train, validate, test = [], [], []
    for vec in vectors:
        u = _split_unit(vec.patient_id, spec.seed)
        if u < t:
            train.append(vec)
        elif u < t + v:
            validate.append(vec)
        else:
            test.append(vec)
    return train, validate, test


def _cell_key(vector: FeatureVector, match_keys: tuple[str, ...]) -> tuple:
    parts = []
    for key in match_keys:
        if key == "sex_bin":
            parts.append(vector.sex_bin)
        elif key == "age_bin":
            parts.append(vector.age_bin)
        elif key == "subgroup":
            parts.append(vector.subgroup)
        else:
            raise ValidationError(f"unsupported match key {key!r}")
    return tuple(parts)


def exact_match(
    masld_vectors: list[FeatureVector],
    non_masld_vectors: list[FeatureVector],
    match_keys: tuple[str, ...] = ("sex_bin", "age_bin"),
    seed: int = 0,
) -> MatchedCohort:
    """Equalize key-combination cell counts by sampling controls per cell.

    All cases are kept. Per cell with m cases and n controls, a seeded
    without-replacement sample of min(m, n) controls is retained; cells short
    of controls are reported in `shortfalls`.
    """
    if not masld_vectors:
        raise InsufficientDataError("exact_match: empty MASLD input")
    cases_by_cell: dict[tuple, list[FeatureVector]] = {}
    for v in masld_vectors:
        cases_by_cell.setdefault(_cell_key(v, match_keys), []).append(v)
    controls_by_cell: dict[tuple, list[FeatureVector]] = {}
    for v in non_masld_vectors:
        controls_by_cell.setdefault(_cell_key(v, match_keys), []).append(v)

    rng = np.random.default_rng(seed)
    kept_controls: list[FeatureVector] = []
    shortfalls: dict[str, int] = {}
    for cell in sorted(cases_by_cell, key=repr):
        m = len(cases_by_cell[cell])
        pool = sorted(controls_by_cell.get(cell, []), key=lambda v: v.patient_id)
        take = min(m, len(pool))
        if take < m:
            shortfalls[repr(cell)] = m - take
        idx = rng.choice(len(pool), size=take, replace=False) if pool else []
        kept_controls.extend(pool[i] for i in sorted(idx))

    return MatchedCohort(
        masld=sorted(masld_vectors, key=lambda v: v.patient_id),
        non_masld=sorted(kept_controls, key=lambda v: v.patient_id),
        match_keys=tuple(match_keys),
        shortfalls=shortfalls,
    )


def adjust_prevalence(
    positives: list[FeatureVector],
    negatives: list[FeatureVector],
    neg_per_pos: float,
    seed: int = 0,
) -> list[FeatureVector]:
    """Keep all positives plus a seeded sample of round(ratio * |positives|) negatives."""
    needed = round(neg_per_pos * len(positives))
    if len(negatives) < needed:
        raise InsufficientDataError(
            f"adjust_prevalence: need {needed} negatives, have {len(negatives)}"
        )
    pool = sorted(negatives, key=lambda v: v.patient_id)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(pool), size=needed, replace=False)
    kept = [pool[i] for i in sorted(idx)]
    out = sorted(positives, key=lambda v: v.patient_id) + kept
    return out


def build_vectors(
    records: list[PatientRecord],
    schema: FeatureSchema,
    masld_codes: CodeList,
    exam_codes: CodeList,
    exclusion_codes: CodeList,
) -> tuple[list[FeatureVector], dict]:
    """Records -> labeled FeatureVectors, with per-reason exclusion counts."""
    from .core_data import assign_cohort

    reasons = {
        "excluded_by_codes": 0,
        "no_dated_index": 0,
        "under_18": 0,
        "unknown_sex": 0,
        "missing_values": 0,
    }
    vectors: list[FeatureVector] = []
    for record in records:
        cohort = assign_cohort(record, masld_codes, exam_codes, exclusion_codes)
        if cohort not in (COHORT_MASLD, COHORT_NON_MASLD):
            reasons["excluded_by_codes"] += 1
            continue
        try:
            event = find_index_event(record, cohort, masld_codes, exam_codes)
        except ValidationError:
            reasons["no_dated_index"] += 1
            continue
        try:
            vec = window_and_aggregate(
                record, event, schema, label=1 if cohort == COHORT_MASLD else 0
            )
        except ValidationError:
            reasons["under_18"] += 1
            continue
        if vec is None:
            if record.sex == "unknown":
                reasons["unknown_sex"] += 1
            else:
                reasons["missing_values"] += 1
            continue
        vectors.append(vec)
    return vectors, reasons
