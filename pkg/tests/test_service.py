import math

import pytest
from fastapi.testclient import TestClient

from maser.fairness import GroupThresholdPolicy, ThresholdAtom
from maser.model import maser_model
from maser.service import create_app

# independently computed with 40-digit arithmetic
SIGMA_INTERCEPT = 0.64807765804004416

BASE_REQUEST = {
    "features": {"BMI": 31.4205, "TG": 136.8698, "ALT": 47.5358, "AST": 26.9263,
                  "HDL": 51.8389},
    "sex": "male",
    "subgroup": "Hispanic",
    "flags": {"T2DM": 0, "hypertension": 0},
}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(maser_model()))


@pytest.fixture(scope="module")
def client_with_policy():
    policy = GroupThresholdPolicy(
        constraint="equal_opportunity",
        groups={g: (ThresholdAtom(0.5, 1.0),) for g in
                ("NH-White", "NH-Black", "NH-Asian", "NH-Other", "Hispanic")},
        target={"tpr": 0.5},
        expected={},
        fingerprint="fit-data",
        objective="accuracy",
        grid_step=0.005,
    )
    return TestClient(create_app(maser_model(), policy=policy))


class TestHealthAndModel:
    def test_health_ok(self, client):
        resp = client.get("/v1/health")
        assert resp.status_code == 200
        assert resp.json() == "ok"

    def test_model_metadata(self, client):
        resp = client.get("/v1/model")
        body = resp.json()
        assert body["intercept"] == 0.6106
        assert body["coefficients"]["ALT"] == 1.5915
        assert "Hispanic" not in body["coefficients"]
        assert body["scaler"]["provenance"].startswith("reconstructed")
        assert len(body["content_hash"]) == 64


class TestScore:
    def test_background_mean_patient(self, client):
        resp = client.post("/v1/score", json=BASE_REQUEST)
        assert resp.status_code == 200
        body = resp.json()
        assert body["probability"] == pytest.approx(SIGMA_INTERCEPT, abs=1e-9)
        assert body["log_odds"] == pytest.approx(0.6106, abs=1e-12)
        assert body["base_value"] == pytest.approx(0.6106, abs=1e-12)
        assert all(abs(phi) < 1e-9 for phi in body["contributions"].values())

    def test_shap_sum_identity(self, client):
        req = dict(BASE_REQUEST)
        req["features"] = {"BMI": 38.0, "TG": 290.0, "ALT": 88.0, "AST": 40.0, "HDL": 35.0}
        req["sex"] = "female"
        req["subgroup"] = "NH-Black"
        req["flags"] = {"T2DM": 1, "hypertension": 1}
        body = client.post("/v1/score", json=req).json()
        total = body["base_value"] + sum(body["contributions"].values())
        assert total == pytest.approx(body["log_odds"], abs=1e-9)
        assert body["odds"] == pytest.approx(
            body["probability"] / (1 - body["probability"]), rel=1e-12
        )

    def test_missing_bmi_400_names_field(self, client):
        req = {
            "features": {"TG": 140.0, "ALT": 35.0, "AST": 28.0, "HDL": 52.0},
            "sex": "female",
            "subgroup": "Hispanic",
        }
        resp = client.post("/v1/score", json=req)
        assert resp.status_code == 400
        assert any(e["field"] == "BMI" for e in resp.json()["errors"])

    def test_unknown_feature_422(self, client):
        req = dict(BASE_REQUEST)
        req["features"] = {**BASE_REQUEST["features"], "GGT": 50.0}
        resp = client.post("/v1/score", json=req)
        assert resp.status_code == 422
        assert resp.json()["errors"][0]["field"] == "GGT"

    def test_out_of_cap_capped_and_annotated(self, client):
        req = dict(BASE_REQUEST)
        req["features"] = {**BASE_REQUEST["features"], "ALT": 5000.0}
        body = client.post("/v1/score", json=req).json()
        assert body["capped"] == ["ALT"]
        capped_req = dict(BASE_REQUEST)
        capped_req["features"] = {**BASE_REQUEST["features"], "ALT": 2000.0}
        capped_body = client.post("/v1/score", json=capped_req).json()
        assert body["probability"] == capped_body["probability"]

    def test_malformed_json_400(self, client):
        resp = client.post(
            "/v1/score", content=b"{not json", headers={"content-type": "application/json"}
        )
        assert resp.status_code == 400

    def test_bad_subgroup_400(self, client):
        req = dict(BASE_REQUEST)
        req["subgroup"] = "Martian"
        resp = client.post("/v1/score", json=req)
        assert resp.status_code == 400
        assert any(e["field"] == "subgroup" for e in resp.json()["errors"])

    def test_identical_requests_identical_bodies(self, client_with_policy):
        a = client_with_policy.post("/v1/score", json=BASE_REQUEST)
        b = client_with_policy.post("/v1/score", json=BASE_REQUEST)
        assert a.content == b.content

    def test_policy_decision_present(self, client_with_policy):
        body = client_with_policy.post("/v1/score", json=BASE_REQUEST).json()
        assert body["policy_constraint"] == "equal_opportunity"
        # single 0.5-threshold atom: decision is deterministic given probability
        assert body["policy_decision"] == int(body["probability"] > 0.5)

    def test_no_policy_null_decision(self, client):
        body = client.post("/v1/score", json=BASE_REQUEST).json()
        assert body["policy_decision"] is None

    def test_t2dm_toggle_odds_ratio(self, client):
        base = client.post("/v1/score", json=BASE_REQUEST).json()
        toggled_req = dict(BASE_REQUEST)
        toggled_req["flags"] = {"T2DM": 1, "hypertension": 0}
        toggled = client.post("/v1/score", json=toggled_req).json()
        ratio = toggled["odds"] / base["odds"]
        assert ratio == pytest.approx(math.exp(0.8242), rel=1e-9)
