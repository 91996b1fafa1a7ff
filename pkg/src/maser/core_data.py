"""Patient-level data model: EHR table ingestion, value capping, demographics.

Raw data arrives as four CSV tables (patients, diagnoses, labs, vitals) keyed
by patient_id. Everything downstream works on immutable PatientRecord objects
and on FeatureVector rows ordered by a FeatureSchema.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date

from .errors import ConfigError, MaserError, ValidationError

SEX_MALE = "male"
SEX_FEMALE = "female"
SEX_UNKNOWN = "unknown"

AGE_BINS = ("18-34", "35-49", "50-64", "65+")

# Canonical subgroup labels and their fixed report ordering.
SUBGROUPS = ("NH-White", "NH-Asian", "NH-Black", "NH-Other", "Hispanic")

COHORT_MASLD = "MASLD"
COHORT_NON_MASLD = "NonMASLD"
COHORT_EXCLUDED = "Excluded"


@dataclass(frozen=True)
class Diagnosis:
    code: str
    date: date | None


@dataclass(frozen=True)
class Measurement:
    code: str
    value: float
    date: date | None


@dataclass(frozen=True)
class PatientRecord:
    """One patient: demographics plus dated diagnosis/lab/vital observations."""

    patient_id: str
    sex: str
    birth_year: int
    race: str
    ethnicity: str
    diagnoses: tuple[Diagnosis, ...] = ()
    labs: tuple[Measurement, ...] = ()
    vitals: tuple[Measurement, ...] = ()

    def __post_init__(self) -> None:
        if not self.patient_id:
            raise ValidationError("patient_id must be non-empty")
        if self.sex not in (SEX_MALE, SEX_FEMALE, SEX_UNKNOWN):
            raise ValidationError(f"invalid sex {self.sex!r}")


@dataclass(frozen=True)
class CodeList:
    """Named set of diagnosis codes; matching is case-insensitive on prefixes."""

    label: str
    codes: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.codes:
            raise ConfigError(f"code list {self.label!r} is empty")
        normalized = [c.strip().upper() for c in self.codes]
        if len(set(normalized)) != len(normalized):
            raise ConfigError(f"code list {self.label!r} has duplicate codes")
        object.__setattr__(self, "codes", tuple(normalized))

    def matches(self, code: str) -> bool:
        code = code.strip().upper()
        return any(code.startswith(c) for c in self.codes)


FEATURE_KINDS = ("continuous", "binary", "categorical")
FEATURE_SOURCES = ("observation", "diagnosis", "sex", "subgroup", "age_bin")


@dataclass(frozen=True)
class FeatureDescriptor:
    """One schema entry: where a feature comes from and what values it admits."""

    name: str
    kind: str
    source: str
    codes: tuple[str, ...] = ()
    cap_low: float | None = None
    cap_high: float | None = None
    levels: tuple[str, ...] = ()
    reference: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in FEATURE_KINDS:
            raise ConfigError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.source not in FEATURE_SOURCES:
            raise ConfigError(f"feature {self.name!r}: unknown source {self.source!r}")
        if self.kind == "continuous":
            if self.cap_low is None or self.cap_high is None:
                raise ConfigError(f"feature {self.name!r}: continuous features need caps")
            if not (self.cap_low < self.cap_high):
                raise ConfigError(f"feature {self.name!r}: cap_low must be < cap_high")
        if self.kind == "categorical":
            if not self.levels:
                raise ConfigError(f"feature {self.name!r}: categorical features need levels")
            if self.reference is None or self.levels.count(self.reference) != 1:
                raise ConfigError(
                    f"feature {self.name!r}: exactly one reference level required"
                )
        object.__setattr__(self, "codes", tuple(c.strip().upper() for c in self.codes))

    def matches_code(self, code: str) -> bool:
        code = code.strip().upper()
        return any(code.startswith(c) for c in self.codes)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature descriptors defining FeatureVector layout."""

    features: tuple[FeatureDescriptor, ...]

    def __post_init__(self) -> None:
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ConfigError("feature names must be unique")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)

    def by_name(self, name: str) -> FeatureDescriptor:
        return self.features[self.index_of(name)]

    def subset(self, names: list[str] | tuple[str, ...]) -> "FeatureSchema":
        """Schema restricted to `names`, original ordering preserved."""
        keep = set(names)
        missing = keep - set(self.names)
        if missing:
            raise KeyError(f"unknown features: {sorted(missing)}")
        return FeatureSchema(tuple(f for f in self.features if f.name in keep))

    def expanded_columns(self) -> tuple[str, ...]:
        """Design-matrix column names: categoricals become non-reference dummies."""
        cols: list[str] = []
        for f in self.features:
            if f.kind == "categorical":
                cols.extend(lv for lv in f.levels if lv != f.reference)
            else:
                cols.append(f.name)
        return tuple(cols)

    def to_jsonable(self) -> list[dict]:
        out = []
        for f in self.features:
            d: dict = {"name": f.name, "kind": f.kind, "source": f.source}
            if f.codes:
                d["codes"] = list(f.codes)
            if f.kind == "continuous":
                d["cap_low"] = f.cap_low
                d["cap_high"] = f.cap_high
            if f.kind == "categorical":
                d["levels"] = list(f.levels)
                d["reference"] = f.reference
            out.append(d)
        return out

    @staticmethod
    def from_jsonable(items: list[dict]) -> "FeatureSchema":
        feats = []
        for d in items:
            feats.append(
                FeatureDescriptor(
                    name=d["name"],
                    kind=d["kind"],
                    source=d["source"],
                    codes=tuple(d.get("codes", ())),
                    cap_low=d.get("cap_low"),
                    cap_high=d.get("cap_high"),
                    levels=tuple(d.get("levels", ())),
                    reference=d.get("reference"),
                )
            )
        return FeatureSchema(tuple(feats))


@dataclass(frozen=True)
class FeatureVector:
    """One aggregated, capped, schema-ordered row per patient.

    `values` holds one float per schema feature; categorical slots store the
    level index. Demographic tags are kept alongside for matching/fairness.
    """

    patient_id: str
    label: int
    subgroup: str
    age_bin: str
    sex_bin: int
    values: tuple[float, ...]


def validate_vectors(vectors: list[FeatureVector], schema: FeatureSchema) -> None:
    """Check every row against schema range invariants; raise on the first breach."""
    for v in vectors:
        if len(v.values) != len(schema):
            raise ValidationError(
                f"{v.patient_id}: {len(v.values)} values for {len(schema)} features"
            )
        if v.label not in (0, 1):
            raise ValidationError(f"{v.patient_id}: label must be 0/1")
        if v.subgroup not in SUBGROUPS:
            raise ValidationError(f"{v.patient_id}: unknown subgroup {v.subgroup!r}")
        if v.age_bin not in AGE_BINS:
            raise ValidationError(f"{v.patient_id}: unknown age bin {v.age_bin!r}")
        for f, x in zip(schema.features, v.values):
            if not math.isfinite(x):
                raise ValidationError(f"{v.patient_id}: non-finite {f.name}")
            if f.kind == "continuous" and not (f.cap_low <= x <= f.cap_high):
                raise ValidationError(
                    f"{v.patient_id}: {f.name}={x} outside caps [{f.cap_low}, {f.cap_high}]"
                )
            if f.kind == "binary" and x not in (0.0, 1.0):
                raise ValidationError(f"{v.patient_id}: {f.name} must be 0/1, got {x}")
            if f.kind == "categorical" and (x != int(x) or not 0 <= x < len(f.levels)):
                raise ValidationError(f"{v.patient_id}: {f.name} level index {x} invalid")


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

@dataclass
class RejectedRow:
    table: str
    line: int
    reason: str
    row: dict = field(default_factory=dict)


def _parse_date(text: str) -> date | None:
    """ISO-8601 date. Missing day defaults to the 15th; missing month drops the row."""
    text = text.strip()
    if not text:
        raise ValueError("empty date")
    parts = text.split("-")
    if len(parts) == 1:
        return None  # year only: observation dropped
    if len(parts) == 2:
        return date(int(parts[0]), int(parts[1]), 15)
    if len(parts) == 3:
        return date.fromisoformat(text)
    raise ValueError(f"bad date {text!r}")


def _parse_sex(text: str) -> str:
    t = text.strip().lower()
    if t in ("male", "m"):
        return SEX_MALE
    if t in ("female", "f"):
        return SEX_FEMALE
    return SEX_UNKNOWN


def _read_csv(path: str, required: tuple[str, ...], table: str):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ValidationError(f"{table} table missing columns: {missing}")
        for i, row in enumerate(reader, start=2):  # line 1 is the header
            yield i, row


def ingest_tables(
    patient_csv: str,
    diagnosis_csv: str,
    lab_csv: str,
    vital_csv: str,
) -> tuple[list[PatientRecord], list[RejectedRow]]:
    """Load the four EHR tables into PatientRecords plus a per-row rejects report.

    Malformed rows are rejected and ingestion continues; a duplicate
    patient_id in the patient table is a hard error.
    """
    rejects: list[RejectedRow] = []
    demo: dict[str, dict] = {}

    for line, row in _read_csv(
        patient_csv, ("patient_id", "sex", "birth_year", "race", "ethnicity"), "patient"
    ):
        pid = (row.get("patient_id") or "").strip()
        if not pid:
            rejects.append(RejectedRow("patient", line, "empty patient_id", row))
            continue
        if pid in demo:
            raise MaserError(f"duplicate patient_id {pid!r} in patient table")
        try:
            birth_year = int(row["birth_year"])
        except (ValueError, TypeError):
            rejects.append(RejectedRow("patient", line, "bad birth_year", row))
            continue
        demo[pid] = {
            "sex": _parse_sex(row.get("sex") or ""),
            "birth_year": birth_year,
            "race": (row.get("race") or "").strip(),
            "ethnicity": (row.get("ethnicity") or "").strip(),
        }

    diagnoses: dict[str, list[Diagnosis]] = {pid: [] for pid in demo}
    labs: dict[str, list[Measurement]] = {pid: [] for pid in demo}
    vitals: dict[str, list[Measurement]] = {pid: [] for pid in demo}

    for line, row in _read_csv(diagnosis_csv, ("patient_id", "code", "date"), "diagnosis"):
        pid = (row.get("patient_id") or "").strip()
        if pid not in demo:
            rejects.append(RejectedRow("diagnosis", line, "unknown patient_id", row))
            continue
        code = (row.get("code") or "").strip()
        if not code:
            rejects.append(RejectedRow("diagnosis", line, "empty code", row))
            continue
        try:
            d = _parse_date(row.get("date") or "")
        except ValueError:
            rejects.append(RejectedRow("diagnosis", line, "bad date", row))
            continue
        if d is None:
            rejects.append(RejectedRow("diagnosis", line, "date missing month", row))
            continue
        diagnoses[pid].append(Diagnosis(code=code.upper(), date=d))

    for table, src, dest in (("lab", lab_csv, labs), ("vital", vital_csv, vitals)):
        for line, row in _read_csv(src, ("patient_id", "code", "value", "date"), table):
            pid = (row.get("patient_id") or "").strip()
            if pid not in demo:
                rejects.append(RejectedRow(table, line, "unknown patient_id", row))
                continue
            code = (row.get("code") or "").strip()
            if not code:
                rejects.append(RejectedRow(table, line, "empty code", row))
                continue
            try:
                value = float(row["value"])
            except (ValueError, TypeError):
                rejects.append(RejectedRow(table, line, "bad value", row))
                continue
            if not math.isfinite(value):
                rejects.append(RejectedRow(table, line, "non-finite value", row))
                continue
            try:
                d = _parse_date(row.get("date") or "")
            except ValueError:
                rejects.append(RejectedRow(table, line, "bad date", row))
                continue
            if d is None:
                rejects.append(RejectedRow(table, line, "date missing month", row))
                continue
            dest[pid].append(Measurement(code=code.upper(), value=value, date=d))

    records = [
        PatientRecord(
            patient_id=pid,
            sex=demo[pid]["sex"],
            birth_year=demo[pid]["birth_year"],
            race=demo[pid]["race"],
            ethnicity=demo[pid]["ethnicity"],
            diagnoses=tuple(sorted(diagnoses[pid], key=lambda x: (x.date, x.code))),
            labs=tuple(sorted(labs[pid], key=lambda x: (x.date, x.code, x.value))),
            vitals=tuple(sorted(vitals[pid], key=lambda x: (x.date, x.code, x.value))),
        )
        for pid in sorted(demo)
    ]
    return records, rejects


def records_to_json(records: list[PatientRecord]) -> str:
    """Canonical JSON serialization (sorted keys, ISO dates); round-trip stable."""
    payload = [
        {
            "patient_id": r.patient_id,
            "sex": r.sex,
            "birth_year": r.birth_year,
            "race": r.race,
            "ethnicity": r.ethnicity,
            "diagnoses": [[d.code, d.date.isoformat()] for d in r.diagnoses],
            "labs": [[m.code, m.value, m.date.isoformat()] for m in r.labs],
            "vitals": [[m.code, m.value, m.date.isoformat()] for m in r.vitals],
        }
        for r in records
    ]
    return json.dumps(payload, sort_keys=True, indent=None, separators=(",", ":"))


def records_from_json(text: str) -> list[PatientRecord]:
    out = []
    for d in json.loads(text):
        out.append(
            PatientRecord(
                patient_id=d["patient_id"],
                sex=d["sex"],
                birth_year=d["birth_year"],
                race=d["race"],
                ethnicity=d["ethnicity"],
                diagnoses=tuple(
                    Diagnosis(code=c, date=date.fromisoformat(s)) for c, s in d["diagnoses"]
                ),
                labs=tuple(
                    Measurement(code=c, value=v, date=date.fromisoformat(s))
                    for c, v, s in d["labs"]
                ),
                vitals=tuple(
                    Measurement(code=c, value=v, date=date.fromisoformat(s))
                    for c, v, s in d["vitals"]
                ),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Feature derivation
# ---------------------------------------------------------------------------

def cap_value(feature_name: str, raw_value: float, schema: FeatureSchema) -> float:
    """Clamp a continuous feature into its clinically plausible range."""
    f = schema.by_name(feature_name)
    if f.kind != "continuous":
        raise ValidationError(f"{feature_name} is not continuous")
    if not math.isfinite(raw_value):
        raise ValidationError(f"{feature_name}: non-finite value {raw_value!r}")
    return min(max(raw_value, f.cap_low), f.cap_high)


def derive_demographics(record: PatientRecord, index_date: date) -> tuple[str, str, int | None]:
    """(age_bin, subgroup, sex_bin) at the index date.

    Hispanic ethnicity dominates race; sex_bin is None for unknown sex so
    callers can exclude those records from matching and modeling.
    """
    age = index_date.year - record.birth_year
    if age < 18:
        raise ValidationError(f"{record.patient_id}: age {age} below inclusion minimum 18")
    if age <= 34:
        age_bin = "18-34"
    elif age <= 49:
        age_bin = "35-49"
    elif age <= 64:
        age_bin = "50-64"
    else:
        age_bin = "65+"

    eth = record.ethnicity.strip().lower()
    race = record.race.strip().lower()
    if eth.startswith("hispanic"):
        subgroup = "Hispanic"
    elif "white" in race:
        subgroup = "NH-White"
    elif "black" in race or "african american" in race:
        subgroup = "NH-Black"
    elif "asian" in race:
        subgroup = "NH-Asian"
    else:
        subgroup = "NH-Other"

    if record.sex == SEX_UNKNOWN:
        sex_bin = None
    else:
        sex_bin = 1 if record.sex == SEX_FEMALE else 0
    return age_bin, subgroup, sex_bin


def assign_cohort(
    record: PatientRecord,
    masld_codes: CodeList,
    exam_codes: CodeList,
    exclusion_codes: CodeList,
) -> str:
    """MASLD / NonMASLD / Excluded per inclusion-exclusion code rules.

    Any exclusion code anywhere excludes; a MASLD code anywhere puts the
    record in the case cohort; an exam code with no MASLD code anywhere puts
    it in the control cohort; everything else is excluded.
    """
    has_exclusion = any(exclusion_codes.matches(d.code) for d in record.diagnoses)
    if has_exclusion:
        return COHORT_EXCLUDED
    has_masld = any(masld_codes.matches(d.code) for d in record.diagnoses)
    if has_masld:
        return COHORT_MASLD
    if any(exam_codes.matches(d.code) for d in record.diagnoses):
        return COHORT_NON_MASLD
    return COHORT_EXCLUDED
