"""Scoring service backing the calculator UI.

Stateless JSON-over-HTTP under /v1/: POST /v1/score, GET /v1/model,
GET /v1/health. The model is immutable for the process lifetime and request
data is never persisted. Responses are pure functions of (model, policy,
request body): the randomized policy decision derives its seed from the
request content, so identical requests return identical bodies.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .fairness import GroupThresholdPolicy, apply_policy
from .model import LassoLogisticModel, shap_for_design_background, sigmoid


@dataclass
class RequestProblem(Exception):
    status: int
    errors: list[dict]


def _field_error(status: int, field: str, message: str) -> RequestProblem:
    return RequestProblem(status, [{"field": field, "error": message}])


def _parse_sex_value(raw) -> int:
    if raw in (0, 1):
        return int(raw)
    if isinstance(raw, str):
        t = raw.strip().lower()
        if t in ("male", "m", "0"):
            return 0
        if t in ("female", "f", "1"):
            return 1
    raise _field_error(400, "sex", "expected male/female or 0/1")


def _parse_flag(name: str, raw) -> float:
    if isinstance(raw, bool):
        return float(raw)
    if raw in (0, 1, 0.0, 1.0):
        return float(raw)
    raise _field_error(400, name, "expected a boolean 0/1 flag")


def build_request_vector(
    model: LassoLogisticModel, payload: dict
) -> tuple[np.ndarray, list[str], str | None]:
    """(design row in raw units, capped feature names, subgroup or None).

    Validation errors raise RequestProblem: missing/ill-typed fields are 400
    with field-level messages; unknown feature names are 422. Out-of-cap
    continuous values are capped and reported, not rejected.
    """
    if not isinstance(payload, dict):
        raise RequestProblem(400, [{"field": "", "error": "body must be a JSON object"}])
    features = payload.get("features")
    if not isinstance(features, dict):
        raise _field_error(400, "features", "required object of feature values")
    flags = payload.get("flags", {})
    if not isinstance(flags, dict):
        raise _field_error(400, "flags", "must be an object")

    schema = model.schema
    continuous_names = {f.name for f in schema.features if f.kind == "continuous"}
    unknown = sorted(set(features) - continuous_names)
    if unknown:
        raise RequestProblem(
            422,
            [{"field": name, "error": "unknown feature"} for name in unknown],
        )
    flag_names = {
        f.name for f in schema.features if f.kind == "binary" and f.source == "diagnosis"
    }
    unknown_flags = sorted(set(flags) - flag_names)
    if unknown_flags:
        raise RequestProblem(
            422,
            [{"field": name, "error": "unknown flag"} for name in unknown_flags],
        )

    errors: list[dict] = []
    capped: list[str] = []
    values: list[float] = []
    subgroup: str | None = None

    for f in schema.features:
        if f.kind == "continuous":
            if f.name not in features:
                errors.append({"field": f.name, "error": "required"})
                values.append(0.0)
                continue
            raw = features[f.name]
            if not isinstance(raw, (int, float)) or isinstance(raw, bool) or not math.isfinite(raw):
                errors.append({"field": f.name, "error": "expected a finite number"})
                values.append(0.0)
                continue
            x = float(raw)
            clamped = min(max(x, f.cap_low), f.cap_high)
            if clamped != x:
                capped.append(f.name)
            values.append(clamped)
        elif f.kind == "binary" and f.source == "sex":
            if "sex" not in payload:
                errors.append({"field": "sex", "error": "required"})
                values.append(0.0)
                continue
            values.append(float(_parse_sex_value(payload["sex"])))
        elif f.kind == "binary":
            values.append(_parse_flag(f.name, flags.get(f.name, 0)))
        elif f.kind == "categorical" and f.source == "subgroup":
            raw = payload.get("subgroup")
            if raw is None:
                errors.append({"field": "subgroup", "error": "required"})
                values.append(float(f.levels.index(f.reference)))
                continue
            if raw not in f.levels:
                errors.append(
                    {"field": "subgroup", "error": f"expected one of {list(f.levels)}"}
                )
                values.append(float(f.levels.index(f.reference)))
                continue
            subgroup = str(raw)
            values.append(float(f.levels.index(raw)))
        elif f.kind == "categorical" and f.source == "age_bin":
            raw = payload.get("age_bin")
            if raw is None or raw not in f.levels:
                errors.append(
                    {"field": "age_bin", "error": f"expected one of {list(f.levels)}"}
                )
                values.append(float(f.levels.index(f.reference)))
                continue
            values.append(float(f.levels.index(raw)))

    if errors:
        raise RequestProblem(400, errors)

    # expand to the design row
    row: list[float] = []
    for f, v in zip(schema.features, values):
        if f.kind == "categorical":
            level = f.levels[int(v)]
            row.extend(1.0 if lv == level else 0.0 for lv in f.levels if lv != f.reference)
        else:
            row.append(v)
    if subgroup is None and isinstance(payload.get("subgroup"), str):
        subgroup = payload["subgroup"]
    return np.array(row), capped, subgroup


def score_payload(
    model: LassoLogisticModel,
    payload: dict,
    policy: GroupThresholdPolicy | None = None,
) -> dict:
    """ScoreResponse body for one request payload."""
    x, capped, subgroup = build_request_vector(model, payload)
    explanation = shap_for_design_background(model, x)
    log_odds = explanation.prediction_logodds
    probability = float(sigmoid(np.array([log_odds]))[0])
    # p/(1-p) via the link, safe where float probability saturates at 1.0
    odds = math.exp(min(log_odds, 700.0))

    decision = None
    constraint = None
    if policy is not None and subgroup is not None and subgroup in policy.groups:
        digest = hashlib.sha256(
            (json.dumps(payload, sort_keys=True) + policy.fingerprint).encode()
        ).digest()
        seed = int.from_bytes(digest[:8], "big")
        decision = int(
            apply_policy(policy, np.array([probability]), np.array([subgroup]), seed)[0]
        )
        constraint = policy.constraint

    return {
        "probability": probability,
        "log_odds": log_odds,
        "odds": odds,
        "base_value": explanation.base_value,
        "contributions": dict(zip(model.columns, explanation.contributions)),
        "model_id": model.metadata.get("model_id", model.provenance),
        "model_hash": model.content_hash(),
        "capped": capped,
        "policy_decision": decision,
        "policy_constraint": constraint,
    }


def create_app(
    model: LassoLogisticModel,
    policy: GroupThresholdPolicy | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="maser scoring service", version=__version__)
    model_hash = model.content_hash()

    @app.get("/v1/health")
    def health():
        return "ok"

    @app.get("/v1/model")
    def model_info():
        return {
            "model_id": model.metadata.get("model_id", model.provenance),
            "content_hash": model_hash,
            "provenance": model.provenance,
            "intercept": model.intercept,
            "coefficients": dict(zip(model.columns, model.coef)),
            "features": model.schema.to_jsonable(),
            "scaler": {
                **model.scaler.to_jsonable(),
                "provenance": model.metadata.get("scaler_note", "training statistics"),
            },
            "lambda": model.lam,
            "policy_loaded": policy is not None,
        }

    @app.post("/v1/score")
    async def score(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse(
                status_code=400,
                content={"errors": [{"field": "", "error": "invalid JSON body"}]},
            )
        try:
            return score_payload(model, payload, policy)
        except RequestProblem as problem:
            return JSONResponse(status_code=problem.status, content={"errors": problem.errors})

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
