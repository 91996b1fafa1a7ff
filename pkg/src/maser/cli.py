"""Command-line orchestration of the pipeline stages.

Every stage writes its artifacts plus a RunManifest JSON (input hashes,
config hash, seeds, output paths, wall timings, warnings). Data outputs are
deterministic given seeds; manifests are the only artifacts carrying timings.

Exit codes: 0 success, 1 internal error, 2 missing inputs, 3 validation
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cohort import SplitSpec, adjust_prevalence, build_vectors, exact_match, split_dataset
from .config import ToolkitConfig, load_config
from .core_data import (
    FeatureVector,
    ingest_tables,
    records_from_json,
    records_to_json,
    validate_vectors,
)
from .datasets import (
    dataset_manifest,
    design_matrix,
    file_sha256,
    read_vectors_csv,
    write_json,
    write_vectors_csv,
)
from .errors import MaserError, ValidationError
from .fairness import (
    EQUAL_OPPORTUNITY,
    EQUALIZED_ODDS,
    GroupThresholdPolicy,
    fairness_report,
    fit_equal_opportunity,
    fit_equalized_odds,
    render_fairness_tables,
)
from .metrics import (
    auroc,
    prevalence_by_group,
    render_pairwise_tables,
    render_summary_table,
    subgroup_metrics,
    summary_metrics,
)
from .model import (
    LassoLogisticModel,
    fit_lambda_path,
    fit_scaler,
    lambda_grid,
    lambda_max,
    maser_model,
    predict_proba,
    rank_and_reduce,
    sigmoid,
    train_lasso_logistic,
)
from .resampling import ResampleParams, smote_tomek_with_info
from .service import score_payload
from .stats import chi_square, derive_seed
from .synth import CohortSpec, generate_cohort, published_cohort_spec

DEFAULT_SEED = 20240501


def _opt(cli_value, env_name: str, default=None):
    """CLI flag takes precedence over the environment, then the default."""
    if cli_value is not None:
        return cli_value
    return os.environ.get(env_name, default)


def _require_file(path: str | None, what: str) -> str:
    if path is None:
        raise FileNotFoundError(f"missing required input: {what}")
    if not Path(path).exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


class StageRun:
    """Collects inputs/outputs/seeds/warnings and writes the stage manifest."""

    def __init__(self, stage: str, out_dir: str):
        self.stage = stage
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.seeds: dict[str, int] = {}
        self.warnings: list[str] = []
        self.extra: dict = {}
        self._start = time.monotonic()

    def add_input(self, path: str) -> None:
        self.inputs[str(path)] = file_sha256(path)

    def out_path(self, name: str) -> str:
        path = str(self.out_dir / name)
        self.outputs.append(path)
        return path

    def finish(self) -> str:
        manifest = {
            "stage": self.stage,
            "toolkit_version": __version__,
            "inputs": self.inputs,
            "outputs": {p: file_sha256(p) for p in self.outputs},
            "seeds": self.seeds,
            "warnings": self.warnings,
            "elapsed_seconds": round(time.monotonic() - self._start, 3),
            **self.extra,
        }
        path = str(self.out_dir / f"manifest_{self.stage}.json")
        write_json(path, manifest)
        return path


def _load_toolkit_config(args, run: "StageRun | None" = None) -> ToolkitConfig:
    path = _opt(getattr(args, "config", None), "MASER_CONFIG")
    if path is not None:
        _require_file(path, "config")
    cfg = load_config(path)
    if run is not None:
        run.extra["config"] = {"path": path or "packaged-default", "sha256": cfg.sha256}
    return cfg


def _seed(args, default: int) -> int:
    value = _opt(getattr(args, "seed", None), "MASER_SEED", default)
    return int(value)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    run = StageRun("synth", args.out)
    cfg = _load_toolkit_config(args, run)
    if args.spec:
        _require_file(args.spec, "cohort spec")
        run.add_input(args.spec)
        spec = CohortSpec.load(args.spec)
    else:
        spec = published_cohort_spec(
            cfg.schema,
            n=args.n,
            prevalence=args.prevalence,
            seed=_seed(args, DEFAULT_SEED),
        )
    run.seeds["generate"] = spec.seed
    vectors = generate_cohort(spec, cfg.schema)
    validate_vectors(vectors, cfg.schema)
    spec_path = run.out_path("cohort_spec.json")
    spec.save(spec_path)
    csv_path = run.out_path("cohort.csv")
    write_vectors_csv(csv_path, vectors, cfg.schema)
    run.extra["dataset"] = dataset_manifest(vectors)
    run.finish()
    return 0


def cmd_ingest(args) -> int:
    run = StageRun("ingest", args.out)
    for path, what in (
        (args.patients, "patients.csv"),
        (args.diagnoses, "diagnoses.csv"),
        (args.labs, "labs.csv"),
        (args.vitals, "vitals.csv"),
    ):
        _require_file(path, what)
        run.add_input(path)
    records, rejects = ingest_tables(args.patients, args.diagnoses, args.labs, args.vitals)
    records_path = run.out_path("records.json")
    with open(records_path, "w", encoding="utf-8") as fh:
        fh.write(records_to_json(records))
        fh.write("\n")
    rejects_path = run.out_path("rejects.csv")
    with open(rejects_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["table", "line", "reason"])
        for r in rejects:
            writer.writerow([r.table, r.line, r.reason])
    run.extra["counts"] = {"records": len(records), "rejected_rows": len(rejects)}
    run.finish()
    return 0


def _trim_for_ratio(
    positives: list[FeatureVector],
    negatives: list[FeatureVector],
    ratio: float,
    seed: int,
    warnings: list[str],
) -> list[FeatureVector]:
    """Exact-ratio adjustment, trimming positives first when controls run short."""
    max_pos = int(len(negatives) / ratio)
    if len(positives) > max_pos:
        warnings.append(
            f"trimmed positives {len(positives)} -> {max_pos} to honor 1:{ratio:g}"
        )
        pool = sorted(positives, key=lambda v: v.patient_id)
        rng = np.random.default_rng(derive_seed(seed, "trim_positives"))
        idx = rng.choice(len(pool), size=max_pos, replace=False)
        positives = [pool[i] for i in sorted(idx)]
    return adjust_prevalence(positives, negatives, ratio, seed=derive_seed(seed, "adjust"))


def cmd_build_cohort(args) -> int:
    run = StageRun("build-cohort", args.out)
    cfg = _load_toolkit_config(args, run)
    seed = _seed(args, cfg.split_seed)
    spec = SplitSpec(fractions=cfg.split_fractions, seed=seed)
    run.seeds["split"] = seed

    if args.vectors:
        _require_file(args.vectors, "vectors CSV")
        run.add_input(args.vectors)
        vectors = read_vectors_csv(args.vectors, cfg.schema)
        reasons: dict = {}
    else:
        _require_file(args.records, "records JSON")
        run.add_input(args.records)
        with open(args.records, encoding="utf-8") as fh:
            records = records_from_json(fh.read())
        vectors, reasons = build_vectors(
            records, cfg.schema, cfg.masld_codes, cfg.exam_codes, cfg.exclusion_codes
        )
    validate_vectors(vectors, cfg.schema)

    train, validate, test = split_dataset(vectors, spec)
    ratio = cfg.eval_neg_per_pos if args.eval_ratio is None else args.eval_ratio
    if ratio > 0:
        validate = _trim_for_ratio(
            [v for v in validate if v.label == 1],
            [v for v in validate if v.label == 0],
            ratio,
            derive_seed(seed, "validate"),
            run.warnings,
        )
        test = _trim_for_ratio(
            [v for v in test if v.label == 1],
            [v for v in test if v.label == 0],
            ratio,
            derive_seed(seed, "test"),
            run.warnings,
        )

    for name, part in (("train", train), ("validate", validate), ("test", test)):
        write_vectors_csv(run.out_path(f"{name}.csv"), part, cfg.schema)
    run.extra["exclusions"] = reasons
    run.extra["datasets"] = {
        name: dataset_manifest(part)
        for name, part in (("train", train), ("validate", validate), ("test", test))
    }
    run.extra["split"] = {"fractions": list(spec.fractions), "eval_neg_per_pos": ratio}
    run.finish()
    return 0


def cmd_match(args) -> int:
    run = StageRun("match", args.out)
    cfg = _load_toolkit_config(args, run)
    _require_file(args.input, "training CSV")
    run.add_input(args.input)
    seed = _seed(args, DEFAULT_SEED)
    run.seeds["match"] = seed
    vectors = read_vectors_csv(args.input, cfg.schema)
    keys = tuple(args.keys.split(","))
    cases = [v for v in vectors if v.label == 1]
    controls = [v for v in vectors if v.label == 0]
    matched = exact_match(cases, controls, match_keys=keys, seed=seed)

    combined = sorted(matched.masld + matched.non_masld, key=lambda v: v.patient_id)
    write_vectors_csv(run.out_path("matched.csv"), combined, cfg.schema)

    balance = {}
    for key in keys:
        levels = sorted({getattr(v, key) for v in combined}, key=str)
        table = [
            [sum(1 for v in matched.masld if getattr(v, key) == lv) for lv in levels],
            [sum(1 for v in matched.non_masld if getattr(v, key) == lv) for lv in levels],
        ]
        nonzero = [i for i in range(len(levels)) if table[0][i] + table[1][i] > 0]
        trimmed = [[row[i] for i in nonzero] for row in table]
        result = chi_square(trimmed) if len(nonzero) > 1 else None
        balance[key] = {
            "levels": [str(lv) for lv in levels],
            "counts": table,
            "chi_square_p": result.p_value if result else None,
        }
    run.extra["balance"] = balance
    run.extra["shortfalls"] = matched.shortfalls
    run.extra["counts"] = {
        "masld": len(matched.masld),
        "non_masld": len(matched.non_masld),
    }
    run.finish()
    return 0


def _vector_from_design_row(
    row: np.ndarray, label: int, patient_id: str, schema
) -> FeatureVector:
    """Map one expanded design row back to a FeatureVector."""
    values: list[float] = []
    subgroup = "Hispanic"
    age_bin = "18-34"
    sex_bin = 0
    j = 0
    for f in schema.features:
        if f.kind == "categorical":
            group = [lv for lv in f.levels if lv != f.reference]
            hot = [lv for lv, k in zip(group, range(j, j + len(group))) if row[k] == 1.0]
            level = hot[0] if hot else f.reference
            values.append(float(f.levels.index(level)))
            if f.source == "subgroup":
                subgroup = level
            elif f.source == "age_bin":
                age_bin = level
            j += len(group)
        else:
            values.append(float(row[j]))
            if f.source == "sex":
                sex_bin = int(row[j])
            j += 1
    return FeatureVector(
        patient_id=patient_id,
        label=label,
        subgroup=subgroup,
        age_bin=age_bin,
        sex_bin=sex_bin,
        values=tuple(values),
    )


def cmd_resample(args) -> int:
    run = StageRun("resample", args.out)
    cfg = _load_toolkit_config(args, run)
    _require_file(args.input, "matched CSV")
    run.add_input(args.input)
    seed = _seed(args, DEFAULT_SEED)
    run.seeds["resample"] = seed
    vectors = read_vectors_csv(args.input, cfg.schema)
    X, y, _ = design_matrix(vectors, cfg.schema)
    continuous = {f.name for f in cfg.schema.features if f.kind == "continuous"}
    binary_mask = np.array([c not in continuous for c in cfg.schema.expanded_columns()])
    params = ResampleParams(k_neighbors=args.k, target_ratio=args.ratio, seed=seed)
    X_res, y_res, info = smote_tomek_with_info(X, y, params, binary_mask=binary_mask)

    out_vectors: list[FeatureVector] = []
    synth_count = 0
    for idx, row, label in zip(info["kept_indices"], X_res, y_res):
        if idx < info["n_input"]:
            out_vectors.append(vectors[idx])
        else:
            synth_count += 1
            out_vectors.append(
                _vector_from_design_row(row, int(label), f"R{synth_count:07d}", cfg.schema)
            )
    write_vectors_csv(run.out_path("resampled.csv"), out_vectors, cfg.schema)
    run.extra["counts"] = {
        "input": len(vectors),
        "output": len(out_vectors),
        "synthetic": info["n_synthetic"],
        "removed": info["n_removed"],
    }
    run.finish()
    return 0


def _select_lambda(X_train, y_train, X_val, y_val) -> tuple[float, list]:
    """Validation-AUROC selection over a warm-started descending lambda grid."""
    lam_max = lambda_max(X_train, y_train)
    grid = lambda_grid(lam_max)
    fits = fit_lambda_path(X_train, y_train, grid, tol=1e-6)
    best_lam, best_auc = None, -1.0
    path = []
    for lam, fit in zip(grid, fits):
        scores = sigmoid(fit.intercept + X_val @ fit.coef)
        auc = auroc(y_val, scores)
        path.append({"lambda": float(lam), "val_auroc": auc, "nonzero": int((fit.coef != 0).sum())})
        if auc > best_auc + 1e-12:
            best_lam, best_auc = float(lam), auc
    return best_lam, path


def _train_one(train_vectors, val_vectors, schema, metadata) -> tuple[LassoLogisticModel, list]:
    X_raw, y, _ = design_matrix(train_vectors, schema)
    scaler = fit_scaler(X_raw, schema)
    X = scaler.transform(X_raw)
    Xv_raw, yv, _ = design_matrix(val_vectors, schema)
    Xv = scaler.transform(Xv_raw)
    lam, path = _select_lambda(X, y, Xv, yv)
    model = train_lasso_logistic(X, y, lam, schema, scaler, metadata=metadata)
    return model, path


def cmd_train(args) -> int:
    run = StageRun("train", args.out)
    cfg = _load_toolkit_config(args, run)
    _require_file(args.train, "training CSV")
    _require_file(args.validate, "validation CSV")
    run.add_input(args.train)
    run.add_input(args.validate)
    train_vectors = read_vectors_csv(args.train, cfg.schema)
    val_vectors = read_vectors_csv(args.validate, cfg.schema)

    full_model, full_path = _train_one(
        train_vectors, val_vectors, cfg.schema, {"model_id": "lasso-all-features"}
    )
    full_model.save(run.out_path("model_full.json"))

    X_raw, _, _ = design_matrix(train_vectors, cfg.schema)
    ranking, reduced_schema = rank_and_reduce(full_model, X_raw, args.top_k)
    write_json(
        run.out_path("shap_ranking.json"),
        {"ranking": [{"feature": f, "mean_abs_contribution": v} for f, v in ranking]},
    )

    reduced_train = _project_vectors(train_vectors, cfg.schema, reduced_schema)
    reduced_val = _project_vectors(val_vectors, cfg.schema, reduced_schema)
    top_model, top_path = _train_one(
        reduced_train, reduced_val, reduced_schema, {"model_id": f"lasso-top-{args.top_k}"}
    )
    top_model.save(run.out_path(f"model_top{args.top_k}.json"))

    run.extra["lambda_paths"] = {"full": full_path, f"top{args.top_k}": top_path}
    run.extra["selected_lambda"] = {
        "full": full_model.lam,
        f"top{args.top_k}": top_model.lam,
    }
    if not full_model.converged or not top_model.converged:
        run.warnings.append("coordinate descent hit max_iter before tolerance")
    run.finish()
    return 0


def _project_vectors(vectors, schema, reduced_schema) -> list[FeatureVector]:
    idx = [schema.index_of(name) for name in reduced_schema.names]
    return [
        FeatureVector(
            patient_id=v.patient_id,
            label=v.label,
            subgroup=v.subgroup,
            age_bin=v.age_bin,
            sex_bin=v.sex_bin,
            values=tuple(v.values[i] for i in idx),
        )
        for v in vectors
    ]


def _model_scores(model: LassoLogisticModel, vectors) -> np.ndarray:
    X_raw, _, _ = design_matrix(vectors, model.schema)
    return predict_proba(model, X_raw)


def _load_model(args) -> LassoLogisticModel:
    name = _opt(args.model, "MASER_MODEL", "maser")
    if name == "maser":
        return maser_model()
    _require_file(name, "model file")
    return LassoLogisticModel.load(name)


def cmd_evaluate(args) -> int:
    run = StageRun("evaluate", args.out)
    _require_file(args.input, "evaluation CSV")
    run.add_input(args.input)
    model = _load_model(args)
    if args.model and Path(str(args.model)).exists():
        run.add_input(args.model)
    seed = _seed(args, DEFAULT_SEED)
    run.seeds["bootstrap"] = seed

    vectors = read_vectors_csv(args.input, model.schema)
    labels = np.array([v.label for v in vectors])
    scores = _model_scores(model, vectors)
    predictions = (scores > args.threshold).astype(int)
    subgroups = np.array([v.subgroup for v in vectors])

    overall = summary_metrics(labels, scores=scores, threshold=args.threshold)
    by_group = subgroup_metrics(labels, predictions, scores, subgroups, seed=seed)
    prevalence = prevalence_by_group(labels, subgroups)

    write_json(
        run.out_path("evaluation.json"),
        {
            "model_id": model.metadata.get("model_id", model.provenance),
            "model_hash": model.content_hash(),
            "threshold": args.threshold,
            "overall": overall.to_jsonable(),
            "subgroups": by_group.to_jsonable(),
            "prevalence_by_group": prevalence,
            "bootstrap": {"n_boot": 2000, "seed": seed},
        },
    )
    tables = render_summary_table(
        {model.metadata.get("model_id", model.provenance): overall}
    ) + "\n" + render_pairwise_tables(by_group)
    with open(run.out_path("evaluation_tables.txt"), "w", encoding="utf-8") as fh:
        fh.write(tables)
    run.finish()
    return 0


def cmd_fairness(args) -> int:
    run = StageRun("fairness", args.out)
    _require_file(args.fit, "fit CSV")
    _require_file(args.eval, "eval CSV")
    run.add_input(args.fit)
    run.add_input(args.eval)
    model = _load_model(args)
    seed = _seed(args, DEFAULT_SEED)
    run.seeds["apply"] = seed

    fit_vectors = read_vectors_csv(args.fit, model.schema)
    fit_labels = np.array([v.label for v in fit_vectors])
    fit_scores = _model_scores(model, fit_vectors)
    fit_groups = np.array([v.subgroup for v in fit_vectors])

    if args.constraint == "equal_opportunity":
        policy = fit_equal_opportunity(
            fit_scores, fit_labels, fit_groups, objective=args.objective,
            grid_step=args.grid_step,
        )
    else:
        policy = fit_equalized_odds(
            fit_scores, fit_labels, fit_groups, objective=args.objective,
            grid_step=args.grid_step,
        )
    policy.save(run.out_path("policy.json"))
    run.warnings.extend(policy.warnings)

    eval_vectors = read_vectors_csv(args.eval, model.schema)
    labels = np.array([v.label for v in eval_vectors])
    scores = _model_scores(model, eval_vectors)
    groups = np.array([v.subgroup for v in eval_vectors])
    report = fairness_report(labels, scores, groups, args.threshold, policy, seed)
    write_json(run.out_path("fairness.json"), report.to_jsonable())
    with open(run.out_path("fairness_tables.txt"), "w", encoding="utf-8") as fh:
        fh.write(render_fairness_tables(report))
    run.finish()
    return 0


def cmd_score(args) -> int:
    model = _load_model(args)
    policy = None
    if args.policy:
        _require_file(args.policy, "policy file")
        policy = GroupThresholdPolicy.load(args.policy)
    input_path = Path(_require_file(args.input, "score input"))
    paths = sorted(input_path.glob("*.json")) if input_path.is_dir() else [input_path]
    responses = []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            payload = json.load(fh)
        responses.append({"input": str(p), "response": score_payload(model, payload, policy)})
    body = responses[0]["response"] if len(responses) == 1 else responses
    text = json.dumps(body, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model = _load_model(args)
    policy = None
    if args.policy:
        _require_file(args.policy, "policy file")
        policy = GroupThresholdPolicy.load(args.policy)
    ui_dir = args.ui if args.ui and Path(args.ui).is_dir() else None
    host, _, port = (_opt(args.bind, "MASER_BIND", "127.0.0.1:8000")).partition(":")
    app = create_app(model, policy, ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maser", description="MASLD risk-prediction pipeline and scoring service"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="toolkit config JSON (default: packaged)")
        p.add_argument("--seed", type=int, help="stage seed (env MASER_SEED)")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth", help="generate a calibrated synthetic cohort")
    common(p)
    p.add_argument("--spec", help="cohort spec JSON (default: published calibration)")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--prevalence", type=float, default=0.25)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="load the four EHR CSV tables")
    common(p)
    p.add_argument("--patients", required=True)
    p.add_argument("--diagnoses", required=True)
    p.add_argument("--labs", required=True)
    p.add_argument("--vitals", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-cohort", help="vectors + train/validate/test split")
    common(p)
    p.add_argument("--records", help="records JSON from ingest")
    p.add_argument("--vectors", help="pre-built vectors CSV (e.g. synth output)")
    p.add_argument("--eval-ratio", type=float, default=None,
                   help="controls per case in validate/test (0 disables; default from config)")
    p.set_defaults(func=cmd_build_cohort)

    p = sub.add_parser("match", help="exact matching on sex and age")
    common(p)
    p.add_argument("--input", required=True, help="training CSV")
    p.add_argument("--keys", default="sex_bin,age_bin")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("resample", help="SMOTE-Tomek the training data")
    common(p)
    p.add_argument("--input", required=True, help="matched CSV")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--ratio", type=float, default=1.0)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("train", help="lasso logistic with SHAP top-k reduction")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--validate", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="overall + subgroup metrics reports")
    common(p)
    p.add_argument("--input", required=True, help="evaluation CSV")
    p.add_argument("--model", help="model JSON, or 'maser' for the published model")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fairness", help="fit + evaluate a threshold policy")
    common(p)
    p.add_argument("--fit", required=True, help="policy-fitting CSV (validation split)")
    p.add_argument("--eval", required=True, help="evaluation CSV (test split)")
    p.add_argument("--model", help="model JSON, or 'maser'")
    p.add_argument(
        "--constraint",
        choices=[EQUAL_OPPORTUNITY, EQUALIZED_ODDS],
        default=EQUAL_OPPORTUNITY,
    )
    p.add_argument("--objective", default="accuracy",
                   choices=["accuracy", "balanced_accuracy", "f1"])
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_fairness)

    p = sub.add_parser("score", help="score one patient JSON or a directory")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("--model", help="model JSON, or 'maser' (default)")
    p.add_argument("--input", required=True)
    p.add_argument("--policy")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", help="run the scoring service")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("--model", help="model JSON, or 'maser' (default)")
    p.add_argument("--policy")
    p.add_argument("--bind", help="host:port (default 127.0.0.1:8000)")
    p.add_argument("--ui", help="static UI bundle directory")
    p.set_defaults(func=cmd_serve)

    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "fairness" and args.grid_step is None:
        args.grid_step = 0.005 if args.constraint == EQUAL_OPPORTUNITY else 0.01
    return args.func(args)


def main() -> None:
    try:
        sys.exit(run())
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        sys.exit(2)
    except (ValidationError, MaserError) as err:
        print(f"error: {err}", file=sys.stderr)
        sys.exit(3)
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {err}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
