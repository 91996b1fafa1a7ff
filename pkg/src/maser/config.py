"""Single-file JSON configuration: schema, caps, code lists, pipeline knobs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

from .core_data import CodeList, FeatureSchema
from .errors import ConfigError


@dataclass(frozen=True)
class ToolkitConfig:
    schema: FeatureSchema
    masld_codes: CodeList
    exam_codes: CodeList
    exclusion_codes: CodeList
    sex_coding: dict
    split_fractions: tuple[float, float, float]
    split_seed: int
    eval_neg_per_pos: float
    maser_scaler: dict
    sha256: str = ""


def _require(d: dict, key: str) -> object:
    if key not in d:
        raise ConfigError(f"config missing {key!r}")
    return d[key]


def load_config(path: str | None = None) -> ToolkitConfig:
    """Parse a config file; with no path, the packaged defaults are used."""
    if path is None:
        text = resources.files("maser").joinpath("data/default_config.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    raw = json.loads(text)

    schema = FeatureSchema.from_jsonable(_require(raw, "features"))
    lists = _require(raw, "code_lists")
    split = raw.get("split", {})
    fractions = (
        float(split.get("train", 0.70)),
        float(split.get("validate", 0.15)),
        float(split.get("test", 0.15)),
    )
    return ToolkitConfig(
        schema=schema,
        masld_codes=CodeList("masld", tuple(_require(lists, "masld"))),
        exam_codes=CodeList("exam", tuple(_require(lists, "exam"))),
        exclusion_codes=CodeList("exclusion", tuple(_require(lists, "exclusion"))),
        sex_coding=raw.get("sex_coding", {"female": 1}),
        split_fractions=fractions,
        split_seed=int(split.get("seed", 20240501)),
        eval_neg_per_pos=float(raw.get("eval_neg_per_pos", 3.0)),
        maser_scaler=raw.get("maser_scaler", {}),
        sha256=hashlib.sha256(text.encode()).hexdigest(),
    )
