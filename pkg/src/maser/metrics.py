"""Confusion metrics, ROC/AUROC, and subgroup-stratified evaluation with
pairwise significance tests.

Undefined ratios (zero denominators) are reported as None and rendered as
"n/a" in text tables, never as zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_data import SUBGROUPS
from .errors import ValidationError
from .stats import TestResult, bootstrap_diff, derive_seed, two_proportion_z

DEFAULT_THRESHOLD = 0.5
AUROC_BOOTSTRAP_N = 2000


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


@dataclass(frozen=True)
class MetricsReport:
    auroc: float | None
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    f1: float | None
    ppv: float | None
    npv: float | None
    counts: ConfusionCounts
    threshold: float | str | None = None

    def to_jsonable(self) -> dict:
        return {
            "auroc": self.auroc,
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "f1": self.f1,
            "ppv": self.ppv,
            "npv": self.npv,
            "counts": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "fn": self.counts.fn,
                "tn": self.counts.tn,
            },
            "threshold": self.threshold,
        }


def confusion(labels: np.ndarray, predictions: np.ndarray) -> ConfusionCounts:
    labels = np.asarray(labels).astype(int)
    predictions = np.asarray(predictions).astype(int)
    if labels.shape != predictions.shape:
        raise ValidationError("labels and predictions must align")
    tp = int(((labels == 1) & (predictions == 1)).sum())
    fp = int(((labels == 0) & (predictions == 1)).sum())
    fn = int(((labels == 1) & (predictions == 0)).sum())
    tn = int(((labels == 0) & (predictions == 0)).sum())
    return ConfusionCounts(tp, fp, fn, tn)


def _roc_arrays(labels, scores) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ROC staircase: per-distinct-score (fpr, tpr, threshold)
    arrays with the (0, 0) point at threshold +inf prepended."""
    labels = np.asarray(labels).astype(int)
    scores = np.asarray(scores, dtype=float)
    if not np.isfinite(scores).all():
        raise ValidationError("scores must be finite")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("roc_curve needs both classes")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    lbl = labels[order]
    ends = np.append(np.nonzero(np.diff(s))[0], len(s) - 1)  # tie-group ends
    starts = np.append(0, ends[:-1] + 1)
    tpr = np.cumsum(lbl == 1)[ends] / n_pos
    fpr = np.cumsum(lbl == 0)[ends] / n_neg
    return (
        np.concatenate([[0.0], fpr]),
        np.concatenate([[0.0], tpr]),
        np.concatenate([[np.inf], s[starts]]),
    )


def roc_curve(labels, scores) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) points: the (0, 0) endpoint at +inf plus one
    point per distinct score, descending. Equal scores are grouped, so ties
    produce diagonal segments; the final point is always (1, 1)."""
    fpr, tpr, thr = _roc_arrays(labels, scores)
    return [(float(x), float(y), float(t)) for x, y, t in zip(fpr, tpr, thr)]


def auroc(labels, scores) -> float:
    """Trapezoidal area under roc_curve; equals the tie-adjusted pairwise
    probability P(score_pos > score_neg) + 0.5 P(equal)."""
    fpr, tpr, _ = _roc_arrays(labels, scores)
    return float(((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1])).sum() / 2.0)


def summary_metrics(
    labels,
    predictions=None,
    scores=None,
    threshold: float = DEFAULT_THRESHOLD,
) -> MetricsReport:
    """MetricsReport from binary predictions, or from scores at a threshold.

    AUROC is included when scores are given. Prediction rule for scores is
    score > threshold.
    """
    labels = np.asarray(labels).astype(int)
    area = None
    thr: float | str | None = None
    if predictions is None:
        if scores is None:
            raise ValidationError("need predictions or scores")
        scores = np.asarray(scores, dtype=float)
        predictions = (scores > threshold).astype(int)
        area = auroc(labels, scores)
        thr = threshold
    counts = confusion(labels, predictions)
    sens = _ratio(counts.tp, counts.tp + counts.fn)
    ppv = _ratio(counts.tp, counts.tp + counts.fp)
    if ppv is None or sens is None or (ppv + sens) == 0:
        f1 = None
    else:
        f1 = 2 * ppv * sens / (ppv + sens)
    return MetricsReport(
        auroc=area,
        accuracy=_ratio(counts.tp + counts.tn, counts.total),
        sensitivity=sens,
        specificity=_ratio(counts.tn, counts.tn + counts.fp),
        f1=f1,
        ppv=ppv,
        npv=_ratio(counts.tn, counts.tn + counts.fn),
        counts=counts,
        threshold=thr,
    )


def prevalence_by_group(labels, subgroups) -> dict[str, float]:
    labels = np.asarray(labels).astype(int)
    subgroups = np.asarray(subgroups)
    out = {}
    for g in group_order(set(subgroups.tolist())):
        mask = subgroups == g
        out[g] = float(labels[mask].mean())
    return out


def group_order(groups) -> list[str]:
    """Canonical report ordering: the five named subgroups first, then others."""
    known = [g for g in SUBGROUPS if g in groups]
    rest = sorted(g for g in groups if g not in SUBGROUPS)
    return known + rest


@dataclass
class SubgroupReport:
    per_group: dict[str, MetricsReport]
    pairwise: dict[str, dict[tuple[str, str], TestResult]]  # metric -> pair -> test
    order: list[str]
    flagged: list[str] = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return {
            "order": self.order,
            "flagged": self.flagged,
            "per_group": {g: r.to_jsonable() for g, r in self.per_group.items()},
            "pairwise": {
                metric: {f"{a}|{b}": t.to_jsonable() for (a, b), t in pairs.items()}
                for metric, pairs in self.pairwise.items()
            },
        }


def subgroup_metrics(
    labels,
    predictions,
    scores,
    subgroups,
    seed: int = 0,
    n_boot: int = AUROC_BOOTSTRAP_N,
) -> SubgroupReport:
    """Per-group metrics plus lower-triangle pairwise significance tests.

    Count-based metrics (accuracy/sensitivity/specificity) use two-proportion
    z tests; AUROC and F1 use seeded bootstrap resampling. Groups missing a
    class are flagged and excluded from pairwise testing.
    """
    labels = np.asarray(labels).astype(int)
    predictions = np.asarray(predictions).astype(int)
    scores = np.asarray(scores, dtype=float)
    subgroups = np.asarray(subgroups)

    order = group_order(set(subgroups.tolist()))
    per_group: dict[str, MetricsReport] = {}
    usable: list[str] = []
    flagged: list[str] = []
    for g in order:
        mask = subgroups == g
        if not mask.any():
            flagged.append(g)
            continue
        g_labels = labels[mask]
        rep = summary_metrics(g_labels, predictions=predictions[mask])
        both_classes = 0 < g_labels.sum() < len(g_labels)
        if both_classes:
            rep = MetricsReport(
                auroc=auroc(g_labels, scores[mask]),
                accuracy=rep.accuracy,
                sensitivity=rep.sensitivity,
                specificity=rep.specificity,
                f1=rep.f1,
                ppv=rep.ppv,
                npv=rep.npv,
                counts=rep.counts,
                threshold=rep.threshold,
            )
            usable.append(g)
        else:
            flagged.append(g)
        per_group[g] = rep

    if len(usable) < 2:
        return SubgroupReport(per_group, {}, order, flagged)

    def f1_metric(lbl, pred):
        tp = int(((lbl == 1) & (pred == 1)).sum())
        fp = int(((lbl == 0) & (pred == 1)).sum())
        fn = int(((lbl == 1) & (pred == 0)).sum())
        denom = 2 * tp + fp + fn
        return 2 * tp / denom if denom > 0 else None

    pairwise: dict[str, dict[tuple[str, str], TestResult]] = {
        m: {} for m in ("auroc", "accuracy", "sensitivity", "specificity", "f1")
    }
    for i, a in enumerate(usable):
        for b in usable[i + 1 :]:
            ma = subgroups == a
            mb = subgroups == b
            ca = per_group[a].counts
            cb = per_group[b].counts
            pairwise["accuracy"][(a, b)] = two_proportion_z(
                ca.tp + ca.tn, ca.total, cb.tp + cb.tn, cb.total
            )
            pairwise["sensitivity"][(a, b)] = two_proportion_z(
                ca.tp, ca.tp + ca.fn, cb.tp, cb.tp + cb.fn
            )
            pairwise["specificity"][(a, b)] = two_proportion_z(
                ca.tn, ca.tn + ca.fp, cb.tn, cb.tn + cb.fp
            )
            pairwise["auroc"][(a, b)] = bootstrap_diff(
                auroc,
                (labels[ma], scores[ma]),
                (labels[mb], scores[mb]),
                n_boot=n_boot,
                seed=derive_seed(seed, "auroc", a, b),
            )
            pairwise["f1"][(a, b)] = bootstrap_diff(
                f1_metric,
                (labels[ma], predictions[ma]),
                (labels[mb], predictions[mb]),
                n_boot=n_boot,
                seed=derive_seed(seed, "f1", a, b),
            )
    return SubgroupReport(per_group, pairwise, order, flagged)


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------

def _fmt(x: float | None, digits: int = 3) -> str:
    if x is None:
        return "n/a"
    return f"{x:.{digits}f}"


def render_summary_table(rows: dict[str, MetricsReport]) -> str:
    """Aligned-column model-performance table (one row per model/threshold)."""
    header = ["Model", "AUROC", "Accuracy", "Sensitivity", "Specificity", "F1"]
    table = [header]
    for name, r in rows.items():
        table.append(
            [name, _fmt(r.auroc), _fmt(r.accuracy), _fmt(r.sensitivity),
             _fmt(r.specificity), _fmt(r.f1)]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    return "\n".join(lines) + "\n"


def _fmt_p(p: float) -> str:
    if p < 1e-3:
        return f"{p:.2e}"
    return f"{p:.3f}"


def render_pairwise_tables(report: SubgroupReport) -> str:
    """Lower-triangle p-value matrix per metric (rows/cols in report order)."""
    groups = [g for g in report.order if g in report.per_group and g not in report.flagged]
    out = []
    for metric, pairs in report.pairwise.items():
        out.append(metric.upper())
        cols = groups[:-1]
        header = [""] + cols
        table = [header]
        for i, row_g in enumerate(groups[1:], start=1):
            row = [row_g]
            for col_g in cols:
                key = (col_g, row_g)
                if key in pairs:
                    row.append(_fmt_p(pairs[key].p_value))
                else:
                    row.append("")
            table.append(row)
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        for r in table:
            out.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        out.append("")
    return "\n".join(out)
