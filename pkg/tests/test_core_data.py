import math
from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from maser.core_data import (
    CodeList,
    PatientRecord,
    assign_cohort,
    cap_value,
    derive_demographics,
    ingest_tables,
    records_from_json,
    records_to_json,
)
from maser.errors import ConfigError, MaserError, ValidationError

MASLD = CodeList("masld", ("K76.0", "K75.81"))
EXAM = CodeList("exam", ("Z00.0",))
EXCLUSION = CodeList("exclusion", ("F10", "K70"))


def record(pid="p1", sex="female", birth_year=1980, race="White", ethnicity="Not Hispanic",
           diagnoses=(), labs=(), vitals=()):
    from maser.core_data import Diagnosis, Measurement

    return PatientRecord(
        patient_id=pid,
        sex=sex,
        birth_year=birth_year,
        race=race,
        ethnicity=ethnicity,
        diagnoses=tuple(Diagnosis(c, d) for c, d in diagnoses),
        labs=tuple(Measurement(c, v, d) for c, v, d in labs),
        vitals=tuple(Measurement(c, v, d) for c, v, d in vitals),
    )


class TestIngest:
    def write_tables(self, tmp_path, patients, diagnoses="", labs="", vitals=""):
        p = tmp_path / "patients.csv"
        d = tmp_path / "diagnoses.csv"
        l = tmp_path / "labs.csv"
        v = tmp_path / "vitals.csv"
        p.write_text("patient_id,sex,birth_year,race,ethnicity\n" + patients)
        d.write_text("patient_id,code,date\n" + diagnoses)
        l.write_text("patient_id,code,value,date\n" + labs)
        v.write_text("patient_id,code,value,date\n" + vitals)
        return str(p), str(d), str(l), str(v)

    def test_cardinality_preserved(self, tmp_path):
        labs = "".join(f"p{i},2085-9,{50+j},2020-01-0{j+1}\n" for i in (1, 2) for j in range(3))
        paths = self.write_tables(
            tmp_path, "p1,female,1980,White,Not Hispanic\np2,male,1970,Asian,Not Hispanic\n",
            labs=labs,
        )
        records, rejects = ingest_tables(*paths)
        assert len(records) == 2
        assert all(len(r.labs) == 3 for r in records)
        assert rejects == []

    def test_unknown_patient_rejected(self, tmp_path):
        paths = self.write_tables(
            tmp_path,
            "p1,female,1980,White,Not Hispanic\n",
            labs="ghost,2085-9,50,2020-01-01\n",
        )
        records, rejects = ingest_tables(*paths)
        assert len(records) == 1
        assert len(records[0].labs) == 0
        assert len(rejects) == 1 and rejects[0].reason == "unknown patient_id"

    def test_empty_diagnosis_table(self, tmp_path):
        paths = self.write_tables(tmp_path, "p1,female,1980,White,Not Hispanic\n")
        records, _ = ingest_tables(*paths)
        assert records[0].diagnoses == ()

    def test_duplicate_patient_id_hard_error(self, tmp_path):
        paths = self.write_tables(
            tmp_path, "p1,female,1980,White,Not Hispanic\np1,male,1990,Asian,Hispanic\n"
        )
        with pytest.raises(MaserError):
            ingest_tables(*paths)

    def test_malformed_rows_recorded_not_fatal(self, tmp_path):
        paths = self.write_tables(
            tmp_path,
            "p1,female,1980,White,Not Hispanic\n",
            diagnoses="p1,K76.0,not-a-date\np1,E11,2020-03-04\n",
            labs="p1,2085-9,abc,2020-01-01\np1,2085-9,inf,2020-01-01\n",
        )
        records, rejects = ingest_tables(*paths)
        assert len(records[0].diagnoses) == 1
        reasons = sorted(r.reason for r in rejects)
        assert reasons == ["bad date", "bad value", "non-finite value"]

    def test_partial_dates(self, tmp_path):
        paths = self.write_tables(
            tmp_path,
            "p1,female,1980,White,Not Hispanic\n",
            labs="p1,2085-9,50,2020-05\np1,2085-9,51,2020\n",
        )
        records, rejects = ingest_tables(*paths)
        assert records[0].labs[0].date == date(2020, 5, 15)  # missing day -> 15th
        assert len(rejects) == 1 and rejects[0].reason == "date missing month"

    def test_serialization_round_trip_bit_identical(self, tmp_path):
        paths = self.write_tables(
            tmp_path,
            "p2,male,1970,Asian,Not Hispanic\np1,female,1980,White,Hispanic\n",
            diagnoses="p1,K76.0,2020-01-02\np2,Z00.0,2019-07-01\n",
            labs="p1,2085-9,50.5,2020-01-01\n",
            vitals="p2,BMI,31.25,2019-06-30\n",
        )
        records, _ = ingest_tables(*paths)
        text = records_to_json(records)
        assert records_to_json(records_from_json(text)) == text


class TestCapValue:
    def test_clamp_low(self, default_schema):
        assert cap_value("BMI", 12.0, default_schema) == 13.0

    def test_identity_inside_range(self, default_schema):
        assert cap_value("BMI", 30.0, default_schema) == 30.0

    def test_clamp_high(self, default_schema):
        assert cap_value("ALT", 5000.0, default_schema) == 2000.0

    def test_unknown_feature(self, default_schema):
        with pytest.raises(KeyError):
            cap_value("nope", 1.0, default_schema)

    def test_non_finite(self, default_schema):
        with pytest.raises(ValidationError):
            cap_value("BMI", math.nan, default_schema)

    @given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    def test_idempotent(self, x):
        from maser.config import load_config

        schema = load_config().schema
        once = cap_value("BMI", x, schema)
        assert cap_value("BMI", once, schema) == once


class TestDemographics:
    def test_age_bin_boundaries(self):
        r = record(birth_year=1990)
        assert derive_demographics(r, date(2024, 6, 1))[0] == "18-34"  # age 34
        assert derive_demographics(r, date(2025, 6, 1))[0] == "35-49"  # age 35

    def test_ethnicity_dominates_race(self):
        r = record(race="Black or African American", ethnicity="Hispanic or Latino")
        assert derive_demographics(r, date(2020, 1, 1))[1] == "Hispanic"

    def test_not_hispanic_asian(self):
        r = record(race="Asian", ethnicity="Not Hispanic or Latino")
        assert derive_demographics(r, date(2020, 1, 1))[1] == "NH-Asian"

    def test_under_18_is_error(self):
        r = record(birth_year=2010)
        with pytest.raises(ValidationError):
            derive_demographics(r, date(2024, 1, 1))

    def test_unknown_sex_yields_none(self):
        r = record(sex="unknown")
        assert derive_demographics(r, date(2020, 1, 1))[2] is None

    def test_sex_coding_female_is_one(self):
        assert derive_demographics(record(sex="female"), date(2020, 1, 1))[2] == 1
        assert derive_demographics(record(sex="male"), date(2020, 1, 1))[2] == 0


class TestAssignCohort:
    def test_masld_code(self):
        r = record(diagnoses=[("K76.0", date(2020, 1, 1))])
        assert assign_cohort(r, MASLD, EXAM, EXCLUSION) == "MASLD"

    def test_exam_only_is_control(self):
        r = record(diagnoses=[("Z00.0", date(2020, 1, 1))])
        assert assign_cohort(r, MASLD, EXAM, EXCLUSION) == "NonMASLD"

    def test_exclusion_dominates(self):
        r = record(diagnoses=[("K76.0", date(2020, 1, 1)), ("F10.20", date(2019, 1, 1))])
        assert assign_cohort(r, MASLD, EXAM, EXCLUSION) == "Excluded"

    def test_no_qualifying_codes_excluded(self):
        r = record(diagnoses=[("E11.9", date(2020, 1, 1))])
        assert assign_cohort(r, MASLD, EXAM, EXCLUSION) == "Excluded"

    def test_prefix_match_case_insensitive(self):
        r = record(diagnoses=[("k75.81", date(2020, 1, 1))])
        assert assign_cohort(r, MASLD, EXAM, EXCLUSION) == "MASLD"

    def test_exam_with_masld_anywhere_never_control(self):
        r = record(
            diagnoses=[("Z00.0", date(2018, 1, 1)), ("K76.0", date(2021, 1, 1))]
        )
        assert assign_cohort(r, MASLD, EXAM, EXCLUSION) == "MASLD"


class TestCodeList:
    def test_duplicate_codes_rejected(self):
        with pytest.raises(ConfigError):
            CodeList("x", ("K76.0", "k76.0"))

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            CodeList("x", ())
