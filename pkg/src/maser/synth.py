"""Synthetic MASLD/non-MASLD cohorts calibrated to published per-class summary
statistics, so the full pipeline has desk-scale, redistributable test data.

Features are sampled independently within class (no covariance information is
published), continuous ones as truncated normals inside the cap range, so
downstream discrimination differs from the source study by design.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

from .core_data import AGE_BINS, FeatureSchema, FeatureVector, SUBGROUPS
from .errors import ConfigError, ValidationError

_MIN_TRUNC_MASS = 1e-10


@dataclass(frozen=True)
class ContinuousSpec:
    mean: float
    sd: float
    cap_low: float
    cap_high: float

    def __post_init__(self) -> None:
        if self.sd <= 0:
            raise ConfigError("sd must be positive")
        if not (self.cap_low < self.cap_high):
            raise ConfigError("cap_low must be < cap_high")


@dataclass(frozen=True)
class ClassSpec:
    continuous: dict[str, ContinuousSpec]
    binary: dict[str, float]  # feature -> probability of 1
    subgroup_dist: dict[str, float]
    age_dist: dict[str, float]

    def __post_init__(self) -> None:
        for name, p in self.binary.items():
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"binary prob for {name!r} outside [0, 1]")
        for label, dist in (("subgroup", self.subgroup_dist), ("age", self.age_dist)):
            if abs(sum(dist.values()) - 1.0) > 1e-9:
                raise ConfigError(f"{label} distribution must sum to 1")
            if any(p < 0 for p in dist.values()):
                raise ConfigError(f"{label} distribution has negative mass")


@dataclass(frozen=True)
class CohortSpec:
    positive: ClassSpec
    negative: ClassSpec
    prevalence: float
    n: int
    seed: int
    feature_order: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not (0.0 <= self.prevalence <= 1.0):
            raise ConfigError("prevalence must be in [0, 1]")
        if self.n < 1:
            raise ConfigError("n must be positive")

    def to_jsonable(self) -> dict:
        def cls(c: ClassSpec) -> dict:
            return {
                "continuous": {
                    k: {"mean": v.mean, "sd": v.sd, "cap_low": v.cap_low, "cap_high": v.cap_high}
                    for k, v in c.continuous.items()
                },
                "binary": c.binary,
                "subgroup_dist": c.subgroup_dist,
                "age_dist": c.age_dist,
            }

        return {
            "positive": cls(self.positive),
            "negative": cls(self.negative),
            "prevalence": self.prevalence,
            "n": self.n,
            "seed": self.seed,
            "feature_order": list(self.feature_order),
        }

    @staticmethod
    def from_jsonable(d: dict) -> "CohortSpec":
        def cls(c: dict) -> ClassSpec:
            return ClassSpec(
                continuous={
                    k: ContinuousSpec(v["mean"], v["sd"], v["cap_low"], v["cap_high"])
                    for k, v in c["continuous"].items()
                },
                binary={k: float(v) for k, v in c["binary"].items()},
                subgroup_dist={k: float(v) for k, v in c["subgroup_dist"].items()},
                age_dist={k: float(v) for k, v in c["age_dist"].items()},
            )

        return CohortSpec(
            positive=cls(d["positive"]),
            negative=cls(d["negative"]),
            prevalence=float(d["prevalence"]),
            n=int(d["n"]),
            seed=int(d["seed"]),
            feature_order=tuple(d.get("feature_order", ())),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_jsonable(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    @staticmethod
    def load(path: str) -> "CohortSpec":
        with open(path, encoding="utf-8") as fh:
            return CohortSpec.from_jsonable(json.load(fh))


# Published per-class training-cohort summary statistics (pre-matching table):
# continuous mean (SD) per class, comorbidity/demographic percentages.
_PUBLISHED_CONTINUOUS = {
    #  name: (case mean, case sd, control mean, control sd)
    "BMI": (33.63, 6.54, 29.04, 6.38),
    "TG": (157.13, 88.22, 114.20, 63.97),
    "ALT": (47.25, 49.18, 22.58, 29.41),
    "AST": (35.25, 46.67, 21.56, 33.55),
    "ALP": (82.09, 36.75, 71.37, 24.82),
    "BUN": (13.99, 4.92, 13.93, 4.81),
    "Cr": (1.08, 2.71, 1.21, 2.89),
    "BIL": (0.60, 0.49, 0.56, 0.31),
    "ALB": (4.32, 0.39, 4.42, 0.35),
    "TP": (7.23, 0.51, 7.15, 0.46),
    "FPG": (110.82, 40.08, 97.89, 29.18),
    "LDL": (109.44, 36.13, 110.27, 34.32),
    "HDL": (47.36, 14.51, 56.08, 16.52),
}

_PUBLISHED_BINARY = {
    # name: (case %, control %); sex is % female renormalized over known sex
    "sex": (57.63 / (42.33 + 57.63) * 100, 58.36 / (41.46 + 58.36) * 100),
    "T2DM": (34.19, 13.34),
    "hypertension": (57.15, 37.01),
    "smoking": (11.97, 7.89),
}

_PUBLISHED_SUBGROUP = {
    "NH-White": (60.25, 59.32),
    "NH-Asian": (6.90, 8.05),
    "NH-Black": (9.50, 16.22),
    "NH-Other": (4.34, 3.74),
    "Hispanic": (19.01, 12.67),
}

_PUBLISHED_AGE = {
    "18-34": (10.50, 17.82),
    "35-49": (26.85, 28.55),
    "50-64": (36.79, 27.08),
    "65+": (25.87, 26.54),
}


def _normalize(dist: dict[str, float]) -> dict[str, float]:
    total = sum(dist.values())
    return {k: v / total for k, v in dist.items()}


def published_cohort_spec(
    schema: FeatureSchema,
    n: int = 100_000,
    prevalence: float = 0.25,
    seed: int = 20240501,
) -> CohortSpec:
    """CohortSpec carrying the published per-class calibration targets.

    Caps come from the schema; categorical percentages are renormalized so
    each distribution sums to one exactly. Default prevalence 0.25 mirrors
    the 1:3 case:control evaluation mix.
    """
    def class_spec(col: int) -> ClassSpec:
        continuous = {}
        binary = {}
        for f in schema.features:
            if f.kind == "continuous":
                if f.name not in _PUBLISHED_CONTINUOUS:
                    raise ConfigError(f"no published calibration for {f.name!r}")
                row = _PUBLISHED_CONTINUOUS[f.name]
                mean, sd = row[2 * col], row[2 * col + 1]
                continuous[f.name] = ContinuousSpec(mean, sd, f.cap_low, f.cap_high)
            elif f.kind == "binary":
                if f.name not in _PUBLISHED_BINARY:
                    raise ConfigError(f"no published calibration for {f.name!r}")
                binary[f.name] = _PUBLISHED_BINARY[f.name][col] / 100.0
        return ClassSpec(
            continuous=continuous,
            binary=binary,
            subgroup_dist=_normalize({k: v[col] for k, v in _PUBLISHED_SUBGROUP.items()}),
            age_dist=_normalize({k: v[col] for k, v in _PUBLISHED_AGE.items()}),
        )

    return CohortSpec(
        positive=class_spec(0),
        negative=class_spec(1),
        prevalence=prevalence,
        n=n,
        seed=seed,
        feature_order=schema.names,
    )


def _truncnorm_draws(rng: np.random.Generator, spec: ContinuousSpec, size: int) -> np.ndarray:
    a = (spec.cap_low - spec.mean) / spec.sd
    b = (spec.cap_high - spec.mean) / spec.sd
    mass = _sps.norm.cdf(b) - _sps.norm.cdf(a)
    if mass < _MIN_TRUNC_MASS:
        raise ValidationError(
            f"infeasible truncation: mean {spec.mean} with caps "
            f"[{spec.cap_low}, {spec.cap_high}] leaves mass {mass:.2e}"
        )
    u = rng.uniform(0.0, 1.0, size=size)
    return _sps.truncnorm.ppf(u, a, b, loc=spec.mean, scale=spec.sd)


def _categorical_draws(
    rng: np.random.Generator, dist: dict[str, float], order: tuple[str, ...], size: int
) -> np.ndarray:
    probs = np.array([dist.get(k, 0.0) for k in order])
    cuts = np.cumsum(probs)
    u = rng.uniform(0.0, 1.0, size=size)
    return np.searchsorted(cuts, u, side="right").clip(0, len(order) - 1)


def generate_cohort(spec: CohortSpec, schema: FeatureSchema) -> list[FeatureVector]:
    """Sample one labeled cohort; deterministic given spec.seed.

    Draw order is fixed (labels, then per class in schema feature order) so
    identical specs reproduce identical cohorts byte for byte.
    """
    if spec.feature_order and tuple(spec.feature_order) != schema.names:
        raise ConfigError("spec feature order does not match the schema")
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    labels = (rng.uniform(0.0, 1.0, size=n) < spec.prevalence).astype(int)

    values = np.zeros((n, len(schema)))
    subgroup_idx = np.zeros(n, dtype=np.int64)
    age_idx = np.zeros(n, dtype=np.int64)

    for label_value, cls in ((1, spec.positive), (0, spec.negative)):
        mask = labels == label_value
        m = int(mask.sum())
        if m == 0:
            continue
        sub = _categorical_draws(rng, cls.subgroup_dist, SUBGROUPS, m)
        age = _categorical_draws(rng, cls.age_dist, AGE_BINS, m)
        subgroup_idx[mask] = sub
        age_idx[mask] = age
        for j, f in enumerate(schema.features):
            if f.kind == "continuous":
                values[mask, j] = _truncnorm_draws(rng, cls.continuous[f.name], m)
            elif f.kind == "binary":
                values[mask, j] = (
                    rng.uniform(0.0, 1.0, size=m) < cls.binary[f.name]
                ).astype(float)
            elif f.source == "subgroup":
                values[mask, j] = sub.astype(float)
            elif f.source == "age_bin":
                values[mask, j] = age.astype(float)

    sex_idx = None
    try:
        sex_idx = schema.index_of("sex")
    except KeyError:
        pass

    width = len(str(n))
    vectors = []
    for i in range(n):
        vectors.append(
            FeatureVector(
                patient_id=f"S{i:0{width}d}",
                label=int(labels[i]),
                subgroup=SUBGROUPS[subgroup_idx[i]],
                age_bin=AGE_BINS[age_idx[i]],
                sex_bin=int(values[i, sex_idx]) if sex_idx is not None else 0,
                values=tuple(float(v) for v in values[i]),
            )
        )
    return vectors
