"""Standardization, L1-penalized logistic regression, the published MASER
equation, exact linear SHAP, and SHAP-ranked feature reduction.

Training minimizes mean negative log-likelihood + lambda * sum|beta_j|
(intercept unpenalized) by cyclic coordinate descent on the local quadratic
model (working response, weights p(1-p)), with a per-sweep backtracking
safeguard that keeps the penalized objective non-increasing.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core_data import FeatureDescriptor, FeatureSchema
from .errors import ConfigError, ValidationError

_WEIGHT_FLOOR = 1e-5  # majorization weight cap below, avoids blowups near p in {0,1}


@dataclass(frozen=True)
class StandardScaler:
    """Per-column standardization for continuous design-matrix columns.

    mean/sd are training-set statistics with divisor n; non-continuous
    columns carry (0, 1) and pass through.
    """

    means: tuple[float, ...]
    sds: tuple[float, ...]
    scaled_mask: tuple[bool, ...]

    def __post_init__(self) -> None:
        for sd, scaled in zip(self.sds, self.scaled_mask):
            if scaled and sd <= 0:
                raise ValidationError("scaled features need sd > 0")

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        means = np.asarray(self.means)
        sds = np.asarray(self.sds)
        return (X - means) / sds

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * np.asarray(self.sds) + np.asarray(self.means)

    def to_jsonable(self) -> dict:
        return {
            "means": list(self.means),
            "sds": list(self.sds),
            "scaled_mask": list(self.scaled_mask),
        }

    @staticmethod
    def from_jsonable(d: dict) -> "StandardScaler":
        return StandardScaler(
            means=tuple(d["means"]),
            sds=tuple(d["sds"]),
            scaled_mask=tuple(bool(b) for b in d["scaled_mask"]),
        )


def fit_scaler(X: np.ndarray, schema: FeatureSchema) -> StandardScaler:
    """Population-style (divisor n) mean/sd for continuous columns of X.

    X columns must follow schema.expanded_columns(). A zero-variance
    continuous feature is an error naming the feature.
    """
    X = np.asarray(X, dtype=float)
    cols = schema.expanded_columns()
    if X.shape[1] != len(cols):
        raise ValidationError(f"X has {X.shape[1]} columns, schema expands to {len(cols)}")
    continuous = {f.name for f in schema.features if f.kind == "continuous"}
    means, sds, mask = [], [], []
    for j, name in enumerate(cols):
        if name in continuous:
            m = float(X[:, j].mean())
            s = float(X[:, j].std())
            if s <= 0:
                raise ValidationError(f"zero-variance continuous feature {name!r}")
            means.append(m)
            sds.append(s)
            mask.append(True)
        else:
            means.append(0.0)
            sds.append(1.0)
            mask.append(False)
    return StandardScaler(tuple(means), tuple(sds), tuple(mask))


# ---------------------------------------------------------------------------
# L1-penalized logistic regression by coordinate descent
# ---------------------------------------------------------------------------

def soft_threshold(z: float, gamma: float) -> float:
    return math.copysign(max(abs(z) - gamma, 0.0), z)


def logistic_nll(X: np.ndarray, y: np.ndarray, intercept: float, coef: np.ndarray) -> float:
    """Mean negative log-likelihood, computed via the stable log1p(exp) form."""
    eta = intercept + X @ coef
    # log(1 + exp(eta)) - y*eta, stable for both signs of eta
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta))


def nll_gradient(
    X: np.ndarray, y: np.ndarray, intercept: float, coef: np.ndarray
) -> tuple[float, np.ndarray]:
    """Gradient of the mean NLL w.r.t. (intercept, coef)."""
    p = sigmoid(intercept + X @ coef)
    r = p - y
    return float(r.mean()), X.T @ r / len(y)


def sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta, dtype=float)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which every coefficient is zero."""
    y = np.asarray(y, dtype=float)
    return float(np.abs(X.T @ (y - y.mean())).max() / len(y))


@dataclass
class FitResult:
    intercept: float
    coef: np.ndarray
    lam: float
    converged: bool
    n_sweeps: int
    objective_trace: list[float]


def fit_lasso_path(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-7,
    max_iter: int = 10_000,
    warm: tuple[float, np.ndarray] | None = None,
) -> FitResult:
    """Core coordinate-descent solver on an already standardized matrix."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isfinite(X).all():
        raise ValidationError("non-finite values in X")
    if set(np.unique(y)) - {0.0, 1.0}:
        raise ValidationError("y must be binary 0/1")
    if lam < 0:
        raise ValidationError("lambda must be >= 0")
    ybar = y.mean()
    if ybar in (0.0, 1.0):
        raise ValidationError("y must contain both classes")

    n, p = X.shape
    cold_start = warm is None
    if cold_start:
        intercept = math.log(ybar / (1.0 - ybar))
        coef = np.zeros(p)
    else:
        intercept = warm[0]
        coef = warm[1].copy()

    def objective(b0: float, b: np.ndarray) -> float:
        return logistic_nll(X, y, b0, b) + lam * float(np.abs(b).sum())

    obj = objective(intercept, coef)
    trace = [obj]
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        prev_intercept, prev_coef = intercept, coef.copy()

        if cold_start and sweeps == 1:
            # sigmoid(logit(ybar)) == ybar exactly, so start from the exact
            # null-model probabilities rather than their float round trip
            prob = np.full(n, ybar)
        else:
            prob = sigmoid(intercept + X @ coef)
        w = np.maximum(prob * (1.0 - prob), _WEIGHT_FLOOR)
        # working residual of the quadratic model; kept in sync coordinate-wise
        resid = (y - prob) / w

        wsum = w.sum()
        delta0 = float(w @ resid) / wsum
        intercept += delta0
        resid -= delta0
        for j in range(p):
            old = coef[j]
            xj = X[:, j]
            wx = w * xj
            denom = float(wx @ xj) / n
            z = float(wx @ resid) / n + denom * old
            new = soft_threshold(z, lam) / denom
            if new != old:
                coef[j] = new
                resid -= (new - old) * xj

        new_obj = objective(intercept, coef)
        if new_obj > obj + 1e-12:
            # proposed sweep overshot the quadratic model's validity: backtrack
            # along the segment toward the previous iterate (prox step is a
            # descent direction, so this terminates)
            t = 1.0
            for _ in range(60):
                t *= 0.5
                cand0 = prev_intercept + t * (intercept - prev_intercept)
                cand = prev_coef + t * (coef - prev_coef)
                cand_obj = objective(cand0, cand)
                if cand_obj <= obj + 1e-12:
                    intercept, coef, new_obj = cand0, cand, cand_obj
                    break
            else:
                intercept, coef, new_obj = prev_intercept, prev_coef, obj

        trace.append(new_obj)
        max_change = max(
            abs(intercept - prev_intercept),
            float(np.abs(coef - prev_coef).max()) if p else 0.0,
        )
        obj = new_obj
        if max_change < tol:
            converged = True
            break

    # float-noise coefficients (soft-threshold residue around the penalty
    # boundary) collapse to an exact zero; legitimate coefficients sit many
    # orders of magnitude above this
    coef[np.abs(coef) < 1e-12] = 0.0

    return FitResult(
        intercept=float(intercept),
        coef=coef,
        lam=lam,
        converged=converged,
        n_sweeps=sweeps,
        objective_trace=trace,
    )


def kkt_violation(X: np.ndarray, y: np.ndarray, fit: FitResult) -> float:
    """Max stationarity residual: |g_j + lam*sign(b_j)| for active coordinates,
    max(|g_j| - lam, 0) for inactive ones, |g_0| for the intercept."""
    g0, g = nll_gradient(np.asarray(X, float), np.asarray(y, float), fit.intercept, fit.coef)
    worst = abs(g0)
    for j, b in enumerate(fit.coef):
        if b != 0:
            worst = max(worst, abs(g[j] + fit.lam * math.copysign(1.0, b)))
        else:
            worst = max(worst, max(abs(g[j]) - fit.lam, 0.0))
    return float(worst)


# ---------------------------------------------------------------------------
# Model object
# ---------------------------------------------------------------------------

PROVENANCE_TRAINED = "trained"
PROVENANCE_PUBLISHED = "published_maser"

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LassoLogisticModel:
    """Intercept + per-column coefficients over an expanded feature schema.

    Continuous inputs are raw clinical units; the embedded scaler is applied
    inside prediction. `background` is the design-space point (standardized
    continuous coordinates) used as the SHAP reference.
    """

    schema: FeatureSchema
    intercept: float
    coef: tuple[float, ...]
    scaler: StandardScaler
    lam: float
    provenance: str
    background: tuple[float, ...] = ()
    converged: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        cols = self.schema.expanded_columns()
        if len(self.coef) != len(cols):
            raise ConfigError(
                f"{len(self.coef)} coefficients for {len(cols)} expanded columns"
            )
        if self.background and len(self.background) != len(cols):
            raise ConfigError("background length must match expanded columns")

    @property
    def columns(self) -> tuple[str, ...]:
        return self.schema.expanded_columns()

    def coefficient(self, name: str) -> float:
        """Coefficient by expanded-column name; absent (reference) names raise KeyError."""
        cols = self.columns
        if name not in cols:
            raise KeyError(name)
        return self.coef[cols.index(name)]

    def background_point(self) -> np.ndarray:
        if self.background:
            return np.asarray(self.background)
        return np.zeros(len(self.coef))

    def decision_function(self, X_raw: np.ndarray) -> np.ndarray:
        """Log-odds for raw-unit design rows (scaler applied internally)."""
        X_raw = np.atleast_2d(np.asarray(X_raw, dtype=float))
        if X_raw.shape[1] != len(self.coef):
            raise ValidationError(
                f"expected {len(self.coef)} columns, got {X_raw.shape[1]}"
            )
        Z = self.scaler.transform(X_raw)
        return self.intercept + Z @ np.asarray(self.coef)

    def to_jsonable(self) -> dict:
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "schema": self.schema.to_jsonable(),
            "intercept": self.intercept,
            "coefficients": dict(zip(self.columns, self.coef)),
            "scaler": self.scaler.to_jsonable(),
            "lambda": self.lam,
            "provenance": self.provenance,
            "background": list(self.background),
            "converged": self.converged,
            "metadata": self.metadata,
        }
        digest = hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()
        ).hexdigest()
        payload["content_hash"] = digest
        return payload

    @staticmethod
    def from_jsonable(d: dict) -> "LassoLogisticModel":
        schema = FeatureSchema.from_jsonable(d["schema"])
        cols = schema.expanded_columns()
        coefficients = d["coefficients"]
        return LassoLogisticModel(
            schema=schema,
            intercept=float(d["intercept"]),
            coef=tuple(float(coefficients[c]) for c in cols),
            scaler=StandardScaler.from_jsonable(d["scaler"]),
            lam=float(d["lambda"]),
            provenance=d["provenance"],
            background=tuple(d.get("background", ())),
            converged=bool(d.get("converged", True)),
            metadata=d.get("metadata", {}),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_jsonable(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    @staticmethod
    def load(path: str) -> "LassoLogisticModel":
        with open(path, encoding="utf-8") as fh:
            return LassoLogisticModel.from_jsonable(json.load(fh))

    def content_hash(self) -> str:
        return self.to_jsonable()["content_hash"]


def train_lasso_logistic(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    schema: FeatureSchema,
    scaler: StandardScaler,
    tol: float = 1e-7,
    max_iter: int = 10_000,
    metadata: dict | None = None,
) -> LassoLogisticModel:
    """Train on a standardized matrix and wrap the fit as a model object.

    Non-convergence is not an error: the model is returned with
    converged=False so callers can decide.
    """
    fit = fit_lasso_path(X, y, lam, tol=tol, max_iter=max_iter)
    background = tuple(float(v) for v in np.asarray(X, dtype=float).mean(axis=0))
    return LassoLogisticModel(
        schema=schema,
        intercept=fit.intercept,
        coef=tuple(float(b) for b in fit.coef),
        scaler=scaler,
        lam=lam,
        provenance=PROVENANCE_TRAINED,
        background=background,
        converged=fit.converged,
        metadata=metadata or {},
    )


def predict_proba(model: LassoLogisticModel, X_raw: np.ndarray) -> np.ndarray:
    """P(positive) for raw-unit design rows."""
    return sigmoid(model.decision_function(X_raw))


# ---------------------------------------------------------------------------
# Published MASER model
# ---------------------------------------------------------------------------

# Published 12-term equation: intercept plus coefficients on five standardized
# labs/vitals, sex (1 = female), two comorbidity flags, and four
# race/ethnicity dummies with Hispanic as the reference level.
MASER_INTERCEPT = 0.6106
MASER_COEFFICIENTS = {
    "BMI": 0.5583,
    "TG": 0.2036,
    "ALT": 1.5915,
    "AST": 0.5375,
    "HDL": -0.4076,
    "sex": -0.9625,
    "T2DM": 0.8242,
    "hypertension": 0.4840,
    "NH-White": -0.3104,
    "NH-Black": -1.0292,
    "NH-Asian": -0.0885,
    "NH-Other": -0.2108,
}

# Reconstructed scaler defaults (see default config note): pooled statistics
# over the two published matched training cohorts.
_MASER_DEFAULT_SCALER = {
    "BMI": (31.4205, 6.8094),
    "TG": (136.8698, 79.9033),
    "ALT": (47.5358, 44.9829),
    "AST": (26.9263, 34.8579),
    "HDL": (51.8389, 16.3543),
}

_MASER_CAPS = {
    "BMI": (13.0, 70.0),
    "TG": (10.0, 3000.0),
    "ALT": (1.0, 2000.0),
    "AST": (1.0, 2000.0),
    "HDL": (3.0, 150.0),
}


def maser_schema() -> FeatureSchema:
    features = [
        FeatureDescriptor(
            name=name,
            kind="continuous",
            source="observation",
            cap_low=_MASER_CAPS[name][0],
            cap_high=_MASER_CAPS[name][1],
        )
        for name in ("BMI", "TG", "ALT", "AST", "HDL")
    ]
    features.append(FeatureDescriptor(name="sex", kind="binary", source="sex"))
    features.append(
        FeatureDescriptor(name="T2DM", kind="binary", source="diagnosis", codes=("E11",))
    )
    features.append(
        FeatureDescriptor(
            name="hypertension",
            kind="binary",
            source="diagnosis",
            codes=("I10", "I11", "I12", "I13", "I15", "I16"),
        )
    )
    features.append(
        FeatureDescriptor(
            name="race_ethnicity",
            kind="categorical",
            source="subgroup",
            levels=("NH-White", "NH-Black", "NH-Asian", "NH-Other", "Hispanic"),
            reference="Hispanic",
        )
    )
    return FeatureSchema(tuple(features))


def maser_model(scaler_params: dict | None = None) -> LassoLogisticModel:
    """The published MASER model, verbatim coefficients.

    scaler_params maps continuous feature name -> {"mean": m, "sd": s} and
    overrides the reconstructed defaults.
    """
    schema = maser_schema()
    cols = schema.expanded_columns()
    coef = tuple(MASER_COEFFICIENTS[c] for c in cols)

    params = dict(_MASER_DEFAULT_SCALER)
    if scaler_params:
        for name, d in scaler_params.items():
            if name in params:
                params[name] = (float(d["mean"]), float(d["sd"]))
    means, sds, mask = [], [], []
    continuous = {f.name for f in schema.features if f.kind == "continuous"}
    for c in cols:
        if c in continuous:
            means.append(params[c][0])
            sds.append(params[c][1])
            mask.append(True)
        else:
            means.append(0.0)
            sds.append(1.0)
            mask.append(False)
    return LassoLogisticModel(
        schema=schema,
        intercept=MASER_INTERCEPT,
        coef=coef,
        scaler=StandardScaler(tuple(means), tuple(sds), tuple(mask)),
        lam=0.0,
        provenance=PROVENANCE_PUBLISHED,
        background=tuple(0.0 for _ in cols),
        metadata={
            "model_id": "maser-published",
            "scaler_note": "reconstructed pooled statistics, not published values",
        },
    )


# ---------------------------------------------------------------------------
# Exact linear SHAP and feature reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShapExplanation:
    base_value: float
    contributions: tuple[float, ...]  # per expanded column, log-odds space
    prediction_logodds: float

    def to_jsonable(self, columns: tuple[str, ...]) -> dict:
        return {
            "base_value": self.base_value,
            "contributions": dict(zip(columns, self.contributions)),
            "prediction_logodds": self.prediction_logodds,
        }


def linear_shap(
    model: LassoLogisticModel, background: np.ndarray, x_raw: np.ndarray
) -> ShapExplanation:
    """Exact independent-features SHAP in log-odds space.

    phi_j = beta_j * (z_j - mean background z_j); base value is the log-odds
    of the background mean, so base + sum(phi) reconstructs the prediction
    exactly.
    """
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if background.shape[0] < 1:
        raise ValidationError("background must be non-empty")
    if background.shape[1] != len(model.coef):
        raise ValidationError("background does not conform to the model schema")
    x_raw = np.asarray(x_raw, dtype=float)
    if x_raw.shape != (len(model.coef),):
        raise ValidationError("x does not conform to the model schema")

    beta = np.asarray(model.coef)
    z = model.scaler.transform(x_raw[None, :])[0]
    z_bg = model.scaler.transform(background).mean(axis=0)
    phi = beta * (z - z_bg)
    base = model.intercept + float(beta @ z_bg)
    return ShapExplanation(
        base_value=base,
        contributions=tuple(float(v) for v in phi),
        prediction_logodds=base + float(phi.sum()),
    )


def shap_for_design_background(model: LassoLogisticModel, x_raw: np.ndarray) -> ShapExplanation:
    """SHAP against the model's stored background point.

    The stored background already lives in standardized design space (zeros
    for the published model, standardized training mean for trained ones), so
    only x is transformed here.
    """
    z_bg = model.background_point()
    beta = np.asarray(model.coef)
    z = model.scaler.transform(np.asarray(x_raw, dtype=float)[None, :])[0]
    phi = beta * (z - z_bg)
    base = model.intercept + float(beta @ z_bg)
    return ShapExplanation(
        base_value=base,
        contributions=tuple(float(v) for v in phi),
        prediction_logodds=base + float(phi.sum()),
    )


def rank_and_reduce(
    model: LassoLogisticModel, background: np.ndarray, k: int
) -> tuple[list[tuple[str, float]], FeatureSchema]:
    """Rank schema features by mean |phi| over the background; keep the top k.

    Dummy groups of a categorical feature are ranked as one feature via the
    summed mean |phi| of their columns. Returns (ranking, reduced schema with
    original feature order preserved).
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > len(model.schema):
        raise ValidationError(f"k={k} exceeds feature count {len(model.schema)}")
    background = np.atleast_2d(np.asarray(background, dtype=float))
    beta = np.asarray(model.coef)
    Z = model.scaler.transform(background)
    z_bg = Z.mean(axis=0)
    mean_abs_phi = np.abs(beta[None, :] * (Z - z_bg)).mean(axis=0)

    cols = model.columns
    importance: dict[str, float] = {}
    for f in model.schema.features:
        if f.kind == "categorical":
            group = [lv for lv in f.levels if lv != f.reference]
            importance[f.name] = float(sum(mean_abs_phi[cols.index(c)] for c in group))
        else:
            importance[f.name] = float(mean_abs_phi[cols.index(f.name)])

    ranking = sorted(importance.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [name for name, _ in ranking[:k]]
    return ranking, model.schema.subset(keep)


# ---------------------------------------------------------------------------
# Lambda-path model selection
# ---------------------------------------------------------------------------

def lambda_grid(lam_max: float, n_points: int = 50, decades: float = 4.0) -> np.ndarray:
    """Log-spaced descending grid from lam_max down `decades` decades."""
    return np.logspace(math.log10(lam_max), math.log10(lam_max) - decades, n_points)


def fit_lambda_path(
    X: np.ndarray,
    y: np.ndarray,
    lams: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> list[FitResult]:
    """Warm-started fits along a descending lambda grid."""
    fits: list[FitResult] = []
    warm = None
    for lam in lams:
        fit = fit_lasso_path(X, y, float(lam), tol=tol, max_iter=max_iter, warm=warm)
        warm = (fit.intercept, fit.coef)
        fits.append(fit)
    return fits
