"""Hypothesis tests and bootstrap machinery for cohort and subgroup comparison.

Statistics are computed here; scipy supplies only the reference distributions
(chi-square and normal tail probabilities).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps

from .errors import ValidationError


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str  # chi_square | mann_whitney | two_prop_z | mcnemar | bootstrap
    detail: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_value <= 1.0):
            raise ValidationError(f"p_value {self.p_value} outside [0, 1]")
        if not math.isfinite(self.statistic):
            raise ValidationError("statistic must be finite")

    def to_jsonable(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            "detail": self.detail,
        }


def derive_seed(master: int, *context) -> int:
    """Independent 64-bit substream seed for (master, context...)."""
    text = ":".join([str(master), *map(str, context)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def chi_square(table) -> TestResult:
    """Pearson chi-square test of homogeneity/independence on an r x c table."""
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2:
        raise ValidationError("chi_square needs a 2-D table")
    if (obs < 0).any():
        raise ValidationError("counts must be non-negative")
    row = obs.sum(axis=1)
    col = obs.sum(axis=0)
    if (row == 0).any() or (col == 0).any():
        raise ValidationError("zero marginal row/column")
    expected = np.outer(row, col) / obs.sum()
    stat = float(((obs - expected) ** 2 / expected).sum())
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    p = float(_sps.chi2.sf(stat, df)) if df > 0 else 1.0
    return TestResult(stat, p, "chi_square", {"df": df})


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _u_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """U for x: pairwise wins plus half-ties."""
    pooled = np.concatenate([x, y])
    ranks = _midranks(pooled)
    rank_sum_x = ranks[: len(x)].sum()
    return float(rank_sum_x - len(x) * (len(x) + 1) / 2)


def _exact_u_sf_counts(ranks2: np.ndarray, nx: int) -> np.ndarray:
    """Distribution of doubled x-rank-sums over all C(n, nx) label assignments.

    Subset-sum dynamic program on integer doubled midranks; returns an array
    `counts` where counts[s] = number of subsets of size nx with doubled rank
    sum s.
    """
    total = int(ranks2.sum())
    counts = np.zeros((nx + 1, total + 1), dtype=float)
    counts[0, 0] = 1.0
    for r in ranks2:
        r = int(r)
        upper = min(nx, len(ranks2))
        for k in range(upper - 1, -1, -1):
            counts[k + 1, r:] += counts[k, : total + 1 - r]
    return counts[nx]


def mann_whitney_u(x, y, method: str = "auto") -> TestResult:
    """Two-sided Mann-Whitney U test with midranks for ties.

    `method`: "exact" enumerates the permutation distribution of U, "normal"
    uses the tie-corrected normal approximation with continuity correction,
    "auto" picks exact for combined sizes <= 10.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 1 or len(y) < 1:
        raise ValidationError("both samples must be non-empty")
    nx, ny = len(x), len(y)
    n = nx + ny
    u = _u_statistic(x, y)

    pooled = np.concatenate([x, y])
    if np.all(pooled == pooled[0]):
        return TestResult(u, 1.0, "mann_whitney", {"U": u, "zero_variance": True})

    if method == "auto":
        method = "exact" if n <= 10 else "normal"

    if method == "exact":
        ranks2 = np.rint(2 * _midranks(pooled)).astype(int)
        counts = _exact_u_sf_counts(ranks2, nx)
        total = counts.sum()
        # doubled rank sum for x corresponding to observed U
        s_obs = int(round(2 * (u + nx * (nx + 1) / 2)))
        sums = np.arange(len(counts))
        p_low = counts[sums <= s_obs].sum() / total
        p_high = counts[sums >= s_obs].sum() / total
        p = min(1.0, 2.0 * min(p_low, p_high))
        return TestResult(u, p, "mann_whitney", {"U": u, "exact": True})

    mean_u = nx * ny / 2.0
    # tie-corrected variance
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts)).sum()) / (n * (n - 1))
    var_u = nx * ny / 12.0 * ((n + 1) - tie_term)
    if var_u <= 0:
        return TestResult(u, 1.0, "mann_whitney", {"U": u, "zero_variance": True})
    z = (abs(u - mean_u) - 0.5) / math.sqrt(var_u)
    z = max(z, 0.0)
    p = float(2.0 * _sps.norm.sf(z))
    return TestResult(u, min(p, 1.0), "mann_whitney", {"U": u, "z": z, "exact": False})


def two_proportion_z(s1: int, n1: int, s2: int, n2: int) -> TestResult:
    """Pooled-variance two-sided z test for a difference in proportions."""
    for s, n in ((s1, n1), (s2, n2)):
        if n < 1 or not (0 <= s <= n):
            raise ValidationError(f"bad successes/trials ({s}, {n})")
    pooled = (s1 + s2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        return TestResult(0.0, 1.0, "two_prop_z", {"zero_variance": True})
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    z = (s1 / n1 - s2 / n2) / se
    p = float(2.0 * _sps.norm.sf(abs(z)))
    return TestResult(z, min(p, 1.0), "two_prop_z", {"p1": s1 / n1, "p2": s2 / n2})


def mcnemar(b: int, c: int, corrected: bool = False) -> TestResult:
    """McNemar's test from the two discordant-pair counts."""
    if b < 0 or c < 0:
        raise ValidationError("discordant counts must be non-negative")
    if b + c == 0:
        return TestResult(0.0, 1.0, "mcnemar", {"degenerate": True, "b": b, "c": c})
    if corrected:
        stat = (abs(b - c) - 1) ** 2 / (b + c) if abs(b - c) > 1 else 0.0
    else:
        stat = (b - c) ** 2 / (b + c)
    p = float(_sps.chi2.sf(stat, 1))
    return TestResult(float(stat), p, "mcnemar", {"b": b, "c": c, "corrected": corrected})


def bootstrap_diff(
    metric_fn,
    group_a: tuple,
    group_b: tuple,
    n_boot: int = 2000,
    seed: int = 0,
) -> TestResult:
    """Percentile bootstrap for metric(group_a) - metric(group_b).

    Groups are (labels, values) pairs resampled with replacement. Resamples on
    which the metric is undefined (raises or returns non-finite) are redrawn,
    with total redraws capped at 10 * n_boot.
    """
    if n_boot < 100:
        raise ValidationError("n_boot must be >= 100")
    a_labels, a_values = (np.asarray(v) for v in group_a)
    b_labels, b_values = (np.asarray(v) for v in group_b)
    if len(a_labels) == 0 or len(b_labels) == 0:
        raise ValidationError("groups must be non-empty")

    def metric(labels, values):
        try:
            m = metric_fn(labels, values)
        except Exception:
            return None
        return float(m) if m is not None and math.isfinite(m) else None

    observed_a = metric(a_labels, a_values)
    observed_b = metric(b_labels, b_values)
    if observed_a is None or observed_b is None:
        raise ValidationError("metric undefined on the observed data")
    observed = observed_a - observed_b

    rng = np.random.default_rng(seed)
    diffs = np.empty(n_boot)
    redraws = 0
    for i in range(n_boot):
        while True:
            ia = rng.integers(0, len(a_labels), size=len(a_labels))
            ib = rng.integers(0, len(b_labels), size=len(b_labels))
            ma = metric(a_labels[ia], a_values[ia])
            mb = metric(b_labels[ib], b_values[ib])
            if ma is not None and mb is not None:
                diffs[i] = ma - mb
                break
            redraws += 1
            if redraws > 10 * n_boot:
                raise ValidationError("bootstrap redraw budget exhausted")

    lo, hi = np.quantile(diffs, [0.025, 0.975])
    share_low = float((diffs <= 0).mean())
    share_high = float((diffs >= 0).mean())
    p = 2.0 * min(share_low, share_high)
    p = min(1.0, max(p, 2.0 / n_boot))
    return TestResult(
        observed,
        p,
        "bootstrap",
        {"ci_low": float(lo), "ci_high": float(hi), "n_boot": n_boot, "redraws": redraws},
    )
