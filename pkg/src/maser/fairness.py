"""Post-hoc group-fairness policies over subgroup ROC geometry.

Equal-opportunity fitting equalizes expected TPR across subgroups; equalized
odds equalizes (FPR, TPR). Exact equality on finite ROC point sets needs
randomized thresholds, so a policy holds up to three (threshold, weight)
atoms per subgroup; prediction draws an atom from a seeded stream and tests
score > threshold. Infinite thresholds are the always-negative (+inf) and
always-positive (-inf) rules.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .metrics import group_order
from .stats import TestResult, mcnemar

EQUAL_OPPORTUNITY = "equal_opportunity"
EQUALIZED_ODDS = "equalized_odds"

POLICY_FORMAT_VERSION = 1

_GEOM_TOL = 1e-9


@dataclass(frozen=True)
class ThresholdAtom:
    threshold: float  # may be +/-inf
    weight: float


@dataclass
class GroupThresholdPolicy:
    constraint: str
    groups: dict[str, tuple[ThresholdAtom, ...]]
    target: dict  # {"tpr": ...} or {"tpr": ..., "fpr": ...}
    expected: dict[str, dict]  # per group expected {"tpr","fpr"} on fit data
    fingerprint: str
    objective: str
    grid_step: float
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.constraint not in (EQUAL_OPPORTUNITY, EQUALIZED_ODDS):
            raise ValidationError(f"unknown constraint {self.constraint!r}")
        for g, atoms in self.groups.items():
            total = sum(a.weight for a in atoms)
            if abs(total - 1.0) > 1e-12:
                raise ValidationError(f"group {g!r}: atom weights sum to {total}")
            if any(a.weight < 0 for a in atoms):
                raise ValidationError(f"group {g!r}: negative atom weight")
            if len(atoms) > 3:
                raise ValidationError(f"group {g!r}: more than three atoms")

    def to_jsonable(self) -> dict:
        def enc(t: float):
            if math.isinf(t):
                return "+inf" if t > 0 else "-inf"
            return t

        return {
            "format_version": POLICY_FORMAT_VERSION,
            "constraint": self.constraint,
            "groups": {
                g: [{"threshold": enc(a.threshold), "weight": a.weight} for a in atoms]
                for g, atoms in self.groups.items()
            },
            "target": self.target,
            "expected": self.expected,
            "fingerprint": self.fingerprint,
            "objective": self.objective,
            "grid_step": self.grid_step,
            "warnings": self.warnings,
        }

    @staticmethod
    def from_jsonable(d: dict) -> "GroupThresholdPolicy":
        def dec(t) -> float:
            if t == "+inf":
                return math.inf
            if t == "-inf":
                return -math.inf
            return float(t)

        return GroupThresholdPolicy(
            constraint=d["constraint"],
            groups={
                g: tuple(ThresholdAtom(dec(a["threshold"]), float(a["weight"])) for a in atoms)
                for g, atoms in d["groups"].items()
            },
            target=d["target"],
            expected=d.get("expected", {}),
            fingerprint=d.get("fingerprint", ""),
            objective=d.get("objective", "accuracy"),
            grid_step=float(d.get("grid_step", 0.0)),
            warnings=list(d.get("warnings", [])),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_jsonable(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    @staticmethod
    def load(path: str) -> "GroupThresholdPolicy":
        with open(path, encoding="utf-8") as fh:
            return GroupThresholdPolicy.from_jsonable(json.load(fh))


def _fingerprint(scores: np.ndarray, labels: np.ndarray, subgroups: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(scores, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(labels, dtype=np.int64).tobytes())
    h.update("\x1f".join(map(str, subgroups)).encode())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Group ROC geometry
# ---------------------------------------------------------------------------

def _roc_vertices(scores: np.ndarray, labels: np.ndarray) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) vertices where predictions are score > threshold.

    Interior thresholds are midpoints between adjacent distinct scores so the
    rule reproduces "score >= s_k" exactly on the fit data; the endpoints are
    the always-negative (+inf) and always-positive (-inf) rules.
    """
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    lbl = labels[order]
    vertices = [(0.0, 0.0, math.inf)]
    tp = fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        tp += int((lbl[i : j + 1] == 1).sum())
        fp += int((lbl[i : j + 1] == 0).sum())
        if j + 1 < n:
            thr = 0.5 * (s[i] + s[j + 1])
            if thr >= s[i]:  # adjacent floats: midpoint may round up
                thr = s[j + 1]
        else:
            thr = -math.inf
        vertices.append((fp / n_neg, tp / n_pos, thr))
        i = j + 1
    return vertices


def _tpr_profile(vertices) -> list[tuple[float, float, float]]:
    """Per distinct TPR level, the minimum-FPR vertex: (tpr, fpr, threshold)."""
    best: dict[float, tuple[float, float]] = {}
    for fpr, tpr, thr in vertices:
        if tpr not in best or fpr < best[tpr][0]:
            best[tpr] = (fpr, thr)
    return [(tpr, best[tpr][0], best[tpr][1]) for tpr in sorted(best)]


def _mix_for_tpr(profile, tau: float):
    """Atoms mixing the two profile points bracketing tau; returns
    (atoms, expected_tpr, expected_fpr, achieved_exactly)."""
    tprs = [p[0] for p in profile]
    if len(profile) == 1:
        tpr, fpr, thr = profile[0]
        return (ThresholdAtom(thr, 1.0),), tpr, fpr, abs(tpr - tau) <= _GEOM_TOL
    lo = 0
    for i, t in enumerate(tprs):
        if t <= tau + _GEOM_TOL:
            lo = i
    if tprs[lo] >= tau - _GEOM_TOL:
        tpr, fpr, thr = profile[lo]
        return (ThresholdAtom(thr, 1.0),), tpr, fpr, True
    if lo == len(profile) - 1:
        tpr, fpr, thr = profile[lo]
        return (ThresholdAtom(thr, 1.0),), tpr, fpr, False
    t0, f0, thr0 = profile[lo]
    t1, f1, thr1 = profile[lo + 1]
    w = (tau - t0) / (t1 - t0)
    atoms = (ThresholdAtom(thr0, 1.0 - w), ThresholdAtom(thr1, w))
    return atoms, (1 - w) * t0 + w * t1, (1 - w) * f0 + w * f1, True


def _grid(step: float) -> np.ndarray:
    n = round(1.0 / step)
    return np.arange(n + 1) / n


def _objective_value(name: str, tpr_by_g, fpr_by_g, pos_by_g, neg_by_g) -> float:
    """Expected-count plug-in objective over per-group operating points."""
    total_pos = sum(pos_by_g.values())
    total_neg = sum(neg_by_g.values())
    exp_tp = sum(pos_by_g[g] * tpr_by_g[g] for g in pos_by_g)
    exp_fp = sum(neg_by_g[g] * fpr_by_g[g] for g in neg_by_g)
    if name == "accuracy":
        return (exp_tp + (total_neg - exp_fp)) / (total_pos + total_neg)
    if name == "balanced_accuracy":
        return 0.5 * (exp_tp / total_pos + 1.0 - exp_fp / total_neg)
    if name == "f1":
        exp_fn = total_pos - exp_tp
        denom = 2 * exp_tp + exp_fp + exp_fn
        return 2 * exp_tp / denom if denom > 0 else 0.0
    raise ValidationError(f"unknown objective {name!r}")


def _group_arrays(scores, labels, subgroups):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    subgroups = np.asarray(subgroups)
    if not (len(scores) == len(labels) == len(subgroups)):
        raise ValidationError("scores/labels/subgroups must align")
    names = group_order(set(subgroups.tolist()))
    per = {}
    for g in names:
        mask = subgroups == g
        g_labels = labels[mask]
        if g_labels.sum() == 0 or g_labels.sum() == len(g_labels):
            raise ValidationError(f"subgroup {g!r} lacks positives or negatives")
        per[g] = (scores[mask], g_labels)
    return scores, labels, subgroups, names, per


def fit_equal_opportunity(
    scores,
    labels,
    subgroups,
    objective: str = "accuracy",
    grid_step: float = 0.005,
) -> GroupThresholdPolicy:
    """Common-TPR randomized thresholds maximizing the plug-in objective.

    For every candidate TPR tau on the grid, each subgroup mixes the two
    adjacent ROC points bracketing tau so its expected TPR equals tau exactly
    (to float precision); the returned policy is the grid optimum.
    """
    if not (0 < grid_step <= 0.1):
        raise ValidationError("grid_step must be in (0, 0.1]")
    scores, labels, subgroups, names, per = _group_arrays(scores, labels, subgroups)

    profiles = {g: _tpr_profile(_roc_vertices(*per[g])) for g in names}
    pos_by_g = {g: int(per[g][1].sum()) for g in names}
    neg_by_g = {g: int(len(per[g][1]) - per[g][1].sum()) for g in names}

    warnings: list[str] = []
    best = None
    for tau in _grid(grid_step):
        atoms_by_g = {}
        tpr_by_g = {}
        fpr_by_g = {}
        exact = True
        for g in names:
            atoms, etpr, efpr, ok = _mix_for_tpr(profiles[g], float(tau))
            atoms_by_g[g] = atoms
            tpr_by_g[g] = etpr
            fpr_by_g[g] = efpr
            exact = exact and ok
        value = _objective_value(objective, tpr_by_g, fpr_by_g, pos_by_g, neg_by_g)
        if best is None or value > best[0] + _GEOM_TOL:
            best = (value, float(tau), atoms_by_g, tpr_by_g, fpr_by_g, exact)

    value, tau, atoms_by_g, tpr_by_g, fpr_by_g, exact = best
    if not exact:
        warnings.append(f"nearest-achievable TPR used for some subgroup at tau={tau}")
    return GroupThresholdPolicy(
        constraint=EQUAL_OPPORTUNITY,
        groups={g: _dedupe_atoms(atoms_by_g[g]) for g in names},
        target={"tpr": tau},
        expected={g: {"tpr": tpr_by_g[g], "fpr": fpr_by_g[g]} for g in names},
        fingerprint=_fingerprint(scores, labels, subgroups),
        objective=objective,
        grid_step=grid_step,
        warnings=warnings,
    )


def _dedupe_atoms(atoms) -> tuple[ThresholdAtom, ...]:
    merged: dict[float, float] = {}
    for a in atoms:
        if a.weight <= 0.0:
            continue
        merged[a.threshold] = merged.get(a.threshold, 0.0) + a.weight
    total = sum(merged.values())
    return tuple(ThresholdAtom(t, w / total) for t, w in merged.items())


# ---------------------------------------------------------------------------
# Equalized odds: convex-hull intersection in ROC space
# ---------------------------------------------------------------------------

def _convex_hull(points: list[tuple[float, float]]) -> list[int]:
    """Andrew's monotone chain on point indices, CCW; handles collinear sets
    (returns the two extreme indices) and duplicates."""
    idx = sorted(range(len(points)), key=lambda i: points[i])
    uniq: list[int] = []
    for i in idx:
        if not uniq or points[i] != points[uniq[-1]]:
            uniq.append(i)
    if len(uniq) <= 2:
        return uniq

    def cross(o, a, b):
        return (points[a][0] - points[o][0]) * (points[b][1] - points[o][1]) - (
            points[a][1] - points[o][1]
        ) * (points[b][0] - points[o][0])

    lower: list[int] = []
    for i in uniq:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 0:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(uniq):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 0:
            upper.pop()
        upper.append(i)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:  # fully collinear input collapses to extremes
        hull = [uniq[0], uniq[-1]]
    return hull


def _point_on_segment(p, a, b, tol=_GEOM_TOL) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > tol:
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    seg2 = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    return -tol <= dot <= seg2 + tol


def _point_in_hull(p, hull_pts, tol=_GEOM_TOL) -> bool:
    if len(hull_pts) == 1:
        return abs(p[0] - hull_pts[0][0]) <= tol and abs(p[1] - hull_pts[0][1]) <= tol
    if len(hull_pts) == 2:
        return _point_on_segment(p, hull_pts[0], hull_pts[1], tol)
    for a, b in zip(hull_pts, hull_pts[1:] + hull_pts[:1]):
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < -tol:
            return False
    return True


def _points_in_hull(xs: np.ndarray, ys: np.ndarray, hull_pts, tol=_GEOM_TOL) -> np.ndarray:
    """Vectorized membership of many points in one CCW hull (or segment)."""
    if len(hull_pts) <= 2:
        return np.array(
            [_point_in_hull((float(x), float(y)), hull_pts, tol) for x, y in zip(xs, ys)]
        )
    inside = np.ones(len(xs), dtype=bool)
    for a, b in zip(hull_pts, hull_pts[1:] + hull_pts[:1]):
        cross = (b[0] - a[0]) * (ys - a[1]) - (b[1] - a[1]) * (xs - a[0])
        inside &= cross >= -tol
    return inside


def _realize_point(p, hull_pts, hull_thresholds) -> tuple[ThresholdAtom, ...]:
    """Express p as a convex combination of at most three hull vertices.

    Uses the ray from the (0,0) vertex through p: p is a mixture of (0,0)
    and the boundary point where the ray exits, itself a mixture of one
    edge's endpoints.
    """
    # direct vertex or edge hits first
    for q, thr in zip(hull_pts, hull_thresholds):
        if abs(p[0] - q[0]) <= _GEOM_TOL and abs(p[1] - q[1]) <= _GEOM_TOL:
            return (ThresholdAtom(thr, 1.0),)
    edges = (
        list(zip(range(len(hull_pts)), list(range(1, len(hull_pts))) + [0]))
        if len(hull_pts) > 2
        else [(0, 1)]
    )
    for i, j in edges:
        a, b = hull_pts[i], hull_pts[j]
        if _point_on_segment(p, a, b):
            seg2 = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
            u = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / seg2
            u = min(max(u, 0.0), 1.0)
            return _dedupe_atoms(
                (
                    ThresholdAtom(hull_thresholds[i], 1.0 - u),
                    ThresholdAtom(hull_thresholds[j], u),
                )
            )

    origin = hull_pts.index((0.0, 0.0))
    best = None  # (s, i, j, u): exit of the ray s*p through edge (i, j)
    for i, j in edges:
        a, b = hull_pts[i], hull_pts[j]
        # solve s*p = a + u*(b - a)
        det = -p[0] * (b[1] - a[1]) + p[1] * (b[0] - a[0])
        if abs(det) < 1e-15:
            continue
        s = (a[1] * (b[0] - a[0]) - a[0] * (b[1] - a[1])) / det
        # recover u from the better conditioned edge coordinate
        if abs(b[0] - a[0]) >= abs(b[1] - a[1]):
            u = (s * p[0] - a[0]) / (b[0] - a[0])
        else:
            u = (s * p[1] - a[1]) / (b[1] - a[1])
        if not (-_GEOM_TOL <= u <= 1 + _GEOM_TOL):
            continue
        if s >= 1 - _GEOM_TOL and (best is None or s > best[0]):
            best = (s, i, j, min(max(u, 0.0), 1.0))
    if best is None:
        raise ValidationError(f"point {p} not realizable in hull")
    s, i, j, u = best
    beta = min(1.0 / s, 1.0)
    return _dedupe_atoms(
        (
            ThresholdAtom(hull_thresholds[origin], 1.0 - beta),
            ThresholdAtom(hull_thresholds[i], beta * (1.0 - u)),
            ThresholdAtom(hull_thresholds[j], beta * u),
        )
    )


def fit_equalized_odds(
    scores,
    labels,
    subgroups,
    objective: str = "accuracy",
    grid_step: float = 0.01,
) -> GroupThresholdPolicy:
    """Common-(FPR, TPR) randomized thresholds within every group's ROC hull.

    The feasible set is the intersection of the groups' ROC convex hulls; a
    2-D grid over it is scored with the plug-in objective and the best point
    is realized per group as a mixture of at most three deterministic rules.
    Without an informative feasible point the best diagonal point is returned
    with a warning.
    """
    if not (0 < grid_step <= 0.1):
        raise ValidationError("grid_step must be in (0, 0.1]")
    scores, labels, subgroups, names, per = _group_arrays(scores, labels, subgroups)

    hulls = {}
    for g in names:
        vertices = _roc_vertices(*per[g])
        pts = [(v[0], v[1]) for v in vertices]
        thrs = [v[2] for v in vertices]
        hull_idx = _convex_hull(pts)
        hulls[g] = ([pts[i] for i in hull_idx], [thrs[i] for i in hull_idx])

    pos_by_g = {g: int(per[g][1].sum()) for g in names}
    neg_by_g = {g: int(len(per[g][1]) - per[g][1].sum()) for g in names}

    axis = _grid(grid_step)
    ff, tt = np.meshgrid(axis, axis, indexing="ij")
    grid_f = ff.ravel()
    grid_t = tt.ravel()
    feasible = np.ones(len(grid_f), dtype=bool)
    for g in names:
        feasible &= _points_in_hull(grid_f, grid_t, hulls[g][0])

    def grid_values(fs: np.ndarray, ts: np.ndarray) -> np.ndarray:
        vals = np.array(
            [
                _objective_value(
                    objective,
                    {g: float(t) for g in names},
                    {g: float(f) for g in names},
                    pos_by_g,
                    neg_by_g,
                )
                for f, t in zip(fs, ts)
            ]
        )
        return vals

    def pick_first_within_tol(values: np.ndarray) -> int:
        top = values.max()
        return int(np.nonzero(values >= top - _GEOM_TOL)[0][0])

    warnings: list[str] = []
    informative = bool((feasible & (grid_t > grid_f + _GEOM_TOL)).any())
    if not informative:
        warnings.append("no informative feasible point; best diagonal point returned")
        values = grid_values(axis, axis)
        t = float(axis[pick_first_within_tol(values)])
        p = (t, t)
        # diagonal points mix the all-negative and all-positive rules
        groups = {
            g: _dedupe_atoms(
                (ThresholdAtom(math.inf, 1.0 - p[1]), ThresholdAtom(-math.inf, p[1]))
            )
            for g in names
        }
    else:
        fs = grid_f[feasible]
        ts = grid_t[feasible]
        values = grid_values(fs, ts)
        k = pick_first_within_tol(values)
        p = (float(fs[k]), float(ts[k]))
        groups = {g: _realize_point(p, hulls[g][0], hulls[g][1]) for g in names}

    return GroupThresholdPolicy(
        constraint=EQUALIZED_ODDS,
        groups=groups,
        target={"fpr": p[0], "tpr": p[1]},
        expected={g: {"tpr": p[1], "fpr": p[0]} for g in names},
        fingerprint=_fingerprint(scores, labels, subgroups),
        objective=objective,
        grid_step=grid_step,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Application and reporting
# ---------------------------------------------------------------------------

def apply_policy(policy: GroupThresholdPolicy, scores, subgroups, seed: int) -> np.ndarray:
    """Randomized predictions: per sample, draw an atom by weight from its
    subgroup's atoms (one seeded stream in input order), predict score >
    threshold."""
    scores = np.asarray(scores, dtype=float)
    subgroups = np.asarray(subgroups)
    unknown = sorted(set(subgroups.tolist()) - set(policy.groups))
    if unknown:
        raise ValidationError(
            f"unknown subgroups {unknown}; policy covers {sorted(policy.groups)}"
        )
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, size=len(scores))
    predictions = np.zeros(len(scores), dtype=np.int64)
    for g, atoms in policy.groups.items():
        mask = subgroups == g
        if not mask.any():
            continue
        thresholds = np.array([a.threshold for a in atoms])
        cuts = np.cumsum([a.weight for a in atoms])
        pick = np.searchsorted(cuts, u[mask], side="right").clip(0, len(atoms) - 1)
        predictions[mask] = (scores[mask] > thresholds[pick]).astype(np.int64)
    return predictions


@dataclass
class FairnessReport:
    per_group: dict[str, dict]  # tpr/fpr/ppv/npv before, after, delta
    overall: dict[str, dict]  # accuracy/sensitivity/specificity/f1
    mcnemar: TestResult
    order: list[str]
    constraint: str

    def to_jsonable(self) -> dict:
        return {
            "constraint": self.constraint,
            "order": self.order,
            "per_group": self.per_group,
            "overall": self.overall,
            "mcnemar": self.mcnemar.to_jsonable(),
        }


def _rate(num: int, den: int) -> float | None:
    return num / den if den else None


def _group_rates(labels, predictions) -> dict:
    tp = int(((labels == 1) & (predictions == 1)).sum())
    fp = int(((labels == 0) & (predictions == 1)).sum())
    fn = int(((labels == 1) & (predictions == 0)).sum())
    tn = int(((labels == 0) & (predictions == 0)).sum())
    return {
        "tpr": _rate(tp, tp + fn),
        "fpr": _rate(fp, fp + tn),
        "ppv": _rate(tp, tp + fp),
        "npv": _rate(tn, tn + fn),
    }


def _overall_rates(labels, predictions) -> dict:
    from .metrics import summary_metrics

    rep = summary_metrics(labels, predictions=predictions)
    return {
        "accuracy": rep.accuracy,
        "sensitivity": rep.sensitivity,
        "specificity": rep.specificity,
        "f1": rep.f1,
    }


def fairness_report(
    labels,
    scores,
    subgroups,
    baseline_threshold: float,
    policy: GroupThresholdPolicy,
    seed: int,
) -> FairnessReport:
    """Before/after comparison of a single threshold vs a fitted policy.

    McNemar runs on correctness discordance of the paired predictions
    (uncorrected), degenerate when the policy never changes a decision.
    """
    labels = np.asarray(labels).astype(int)
    scores = np.asarray(scores, dtype=float)
    subgroups = np.asarray(subgroups)

    before = (scores > baseline_threshold).astype(np.int64)
    after = apply_policy(policy, scores, subgroups, seed)

    order = group_order(set(subgroups.tolist()))
    per_group = {}
    for g in order:
        mask = subgroups == g
        b = _group_rates(labels[mask], before[mask])
        a = _group_rates(labels[mask], after[mask])
        per_group[g] = {
            "before": b,
            "after": a,
            "delta": {
                k: (a[k] - b[k]) if a[k] is not None and b[k] is not None else None
                for k in b
            },
        }

    b_overall = _overall_rates(labels, before)
    a_overall = _overall_rates(labels, after)
    overall = {
        "before": b_overall,
        "after": a_overall,
        "delta": {
            k: (a_overall[k] - b_overall[k])
            if a_overall[k] is not None and b_overall[k] is not None
            else None
            for k in b_overall
        },
    }

    correct_before = before == labels
    correct_after = after == labels
    b_count = int((correct_before & ~correct_after).sum())
    c_count = int((~correct_before & correct_after).sum())
    test = mcnemar(b_count, c_count, corrected=False)

    return FairnessReport(
        per_group=per_group,
        overall=overall,
        mcnemar=test,
        order=order,
        constraint=policy.constraint,
    )


def render_fairness_tables(report: FairnessReport) -> str:
    """Three aligned-column tables: group TPR/FPR, group PPV/NPV, overall."""

    def fmt(x):
        return "n/a" if x is None else f"{x:.3f}"

    out = []
    for title, keys in (
        ("TPR/FPR BEFORE AND AFTER", ("tpr", "fpr")),
        ("PPV/NPV BEFORE AND AFTER", ("ppv", "npv")),
    ):
        out.append(title)
        header = ["Subgroup"]
        for k in keys:
            header += [f"{k.upper()} Before", f"{k.upper()} After", f"Change in {k.upper()}"]
        table = [header]
        for g in report.order:
            row = [g]
            for k in keys:
                d = report.per_group[g]
                row += [fmt(d["before"][k]), fmt(d["after"][k]), fmt(d["delta"][k])]
            table.append(row)
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        for r in table:
            out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        out.append("")

    out.append("OVERALL PERFORMANCE BEFORE AND AFTER")
    header = ["Metric", "Before", "After", "Change in Metric (After - Before)"]
    table = [header]
    for k in ("accuracy", "sensitivity", "specificity", "f1"):
        table.append(
            [
                k,
                fmt(report.overall["before"][k]),
                fmt(report.overall["after"][k]),
                fmt(report.overall["delta"][k]),
            ]
        )
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    for r in table:
        out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    out.append(
        f"McNemar chi2 = {report.mcnemar.statistic:.4f}, p = {report.mcnemar.p_value:.4f}"
    )
    return "\n".join(out) + "\n"
