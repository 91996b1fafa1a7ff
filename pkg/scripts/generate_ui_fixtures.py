#!/usr/bin/env python3
"""Record scoring-service responses for the calculator UI test suite.

Runs the FastAPI app in-process against the published model and writes
request/response pairs to frontend/tests/fixtures.json. The frontend tests
replay these recorded bodies through an intercepted fetch, so every displayed
number in those tests is a genuine service-returned value.
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from maser.model import maser_model
from maser.service import create_app

PATIENTS = [
    {"name": "baseline-hispanic-male",
     "features": {"BMI": 31.4205, "TG": 136.8698, "ALT": 47.5358, "AST": 26.9263, "HDL": 51.8389},
     "sex": "male", "subgroup": "Hispanic", "flags": {"T2DM": 0, "hypertension": 0}},
    {"name": "metabolic-risk-female",
     "features": {"BMI": 38.2, "TG": 240.0, "ALT": 88.0, "AST": 51.0, "HDL": 38.0},
     "sex": "female", "subgroup": "NH-White", "flags": {"T2DM": 1, "hypertension": 1}},
    {"name": "lean-healthy-male",
     "features": {"BMI": 22.5, "TG": 85.0, "ALT": 18.0, "AST": 20.0, "HDL": 62.0},
     "sex": "male", "subgroup": "NH-Asian", "flags": {"T2DM": 0, "hypertension": 0}},
    {"name": "hypertensive-older-female",
     "features": {"BMI": 29.8, "TG": 150.0, "ALT": 30.0, "AST": 27.0, "HDL": 48.0},
     "sex": "female", "subgroup": "NH-Black", "flags": {"T2DM": 0, "hypertension": 1}},
    {"name": "diabetic-male",
     "features": {"BMI": 33.1, "TG": 190.0, "ALT": 52.0, "AST": 33.0, "HDL": 41.0},
     "sex": "male", "subgroup": "NH-Other", "flags": {"T2DM": 1, "hypertension": 0}},
    {"name": "elevated-enzymes-female",
     "features": {"BMI": 27.0, "TG": 120.0, "ALT": 140.0, "AST": 95.0, "HDL": 55.0},
     "sex": "female", "subgroup": "Hispanic", "flags": {"T2DM": 0, "hypertension": 0}},
    {"name": "capped-alt-male",
     "features": {"BMI": 30.0, "TG": 160.0, "ALT": 5000.0, "AST": 60.0, "HDL": 45.0},
     "sex": "male", "subgroup": "NH-White", "flags": {"T2DM": 0, "hypertension": 1}},
    {"name": "low-hdl-female",
     "features": {"BMI": 35.6, "TG": 210.0, "ALT": 61.0, "AST": 39.0, "HDL": 29.0},
     "sex": "female", "subgroup": "Hispanic", "flags": {"T2DM": 1, "hypertension": 1}},
    {"name": "borderline-male",
     "features": {"BMI": 26.4, "TG": 110.0, "ALT": 35.0, "AST": 28.0, "HDL": 50.0},
     "sex": "male", "subgroup": "NH-Black", "flags": {"T2DM": 0, "hypertension": 0}},
    {"name": "young-overweight-female",
     "features": {"BMI": 31.0, "TG": 135.0, "ALT": 41.0, "AST": 25.0, "HDL": 47.0},
     "sex": "female", "subgroup": "NH-Asian", "flags": {"T2DM": 0, "hypertension": 0}},
]


def main() -> None:
    client = TestClient(create_app(maser_model()))
    fixtures = []
    for patient in PATIENTS:
        request = {k: v for k, v in patient.items() if k != "name"}
        response = client.post("/v1/score", json=request)
        response.raise_for_status()
        fixtures.append(
            {"name": patient["name"], "request": request, "response": response.json()}
        )

    # T2DM toggle pair for the what-if odds-ratio check
    toggled = json.loads(json.dumps(fixtures[0]["request"]))
    toggled["flags"]["T2DM"] = 1
    response = client.post("/v1/score", json=toggled)
    response.raise_for_status()
    fixtures.append(
        {"name": "baseline-hispanic-male+T2DM", "request": toggled, "response": response.json()}
    )

    # lowered-BMI pair for the what-if direction check
    lowered = json.loads(json.dumps(fixtures[0]["request"]))
    lowered["features"]["BMI"] = 25.0
    response = client.post("/v1/score", json=lowered)
    response.raise_for_status()
    fixtures.append(
        {"name": "baseline-hispanic-male+BMI25", "request": lowered, "response": response.json()}
    )

    out = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fixtures, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(fixtures)} fixtures to {out}")


if __name__ == "__main__":
    main()
