"""SMOTE oversampling with Tomek-link cleaning for logistic training data.

Distances are Euclidean on internally standardized features so lab scales do
not dominate neighbor selection; interpolation happens in the original space
(affine-equivariant, so the choice only affects neighbor selection).
Nearest-neighbor scans are exact and chunked to bound memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ValidationError

_CHUNK = 512


@dataclass(frozen=True)
class ResampleParams:
    k_neighbors: int = 5
    target_ratio: float = 1.0  # minority/majority after SMOTE
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise ValidationError("k_neighbors must be >= 1")
        if not (0 < self.target_ratio <= 1):
            raise ValidationError("target_ratio must be in (0, 1]")


def _standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return mean, sd


def _chunk_sq_distances(Za: np.ndarray, sq_a: np.ndarray, Zq: np.ndarray,
                        sq_q: np.ndarray, buf: np.ndarray) -> np.ndarray:
    """Squared distances query-chunk x reference into a reused buffer."""
    m = len(Zq)
    out = buf[:m]
    np.matmul(Zq, Za.T, out=out)
    out *= -2.0
    out += sq_a[None, :]
    out += sq_q[:, None]
    np.maximum(out, 0.0, out=out)
    return out

def _self_nearest_neighbors(Z: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest other rows for every row of Z, chunked.

    For k=1 ties resolve to the lowest index (argmin semantics). For k>1 the
    selected set is ordered by (distance, index); a distance tie exactly at
    the k-th neighbor resolves by partition order, deterministically for a
    fixed input.
    """
    idx, _ = _self_knn_with_distances(Z, k)
    return idx

def _self_knn_with_distances(Z: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(indices, squared distances) of the k nearest other rows per row."""
    n = len(Z)
    out = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k))
    sq = (Z**2).sum(axis=1)
    buf = np.empty((min(_CHUNK, n), n))
    for start in range(0, n, _CHUNK):
        chunk = Z[start : start + _CHUNK]
        m = len(chunk)
        d2 = _chunk_sq_distances(Z, sq, chunk, sq[start : start + m], buf)
        d2[np.arange(m), start + np.arange(m)] = np.inf
        if k == 1:
            nn = np.argmin(d2, axis=1)
            out[start : start + m, 0] = nn
            dist[start : start + m, 0] = d2[np.arange(m), nn]
        else:
            part = np.argpartition(d2, k - 1, axis=1)[:, :k]
            rows = np.arange(m)[:, None]
            order = np.lexsort((part, d2[rows, part]), axis=1)
            chosen = part[rows, order]
            out[start : start + m] = chosen
            dist[start : start + m] = d2[rows, chosen]
    return out, dist


def smote(
    minority: np.ndarray,
    majority: np.ndarray,
    params: ResampleParams,
    binary_mask: np.ndarray | None = None,
) -> np.ndarray:
    """Synthetic minority samples by interpolating toward k-nearest minority neighbors.

    Count = round(target_ratio * |majority|) - |minority|, floored at zero.
    Binary columns (given or auto-detected as {0,1}-valued) are rounded after
    interpolation so the feature space stays valid.
    """
    minority = np.asarray(minority, dtype=float)
    majority = np.asarray(majority, dtype=float)
    if minority.ndim != 2:
        raise ValidationError("minority must be a 2-D array")
    if len(minority) <= params.k_neighbors:
        raise InsufficientDataError(
            f"smote needs |minority| > k_neighbors ({len(minority)} <= "
            f"{params.k_neighbors}); use a smaller k"
        )
    n_needed = max(0, round(params.target_ratio * len(majority)) - len(minority))
    if n_needed == 0:
        return np.empty((0, minority.shape[1]))

    if binary_mask is None:
        stacked = np.vstack([minority, majority]) if len(majority) else minority
        binary_mask = np.array(
            [np.isin(stacked[:, j], (0.0, 1.0)).all() for j in range(stacked.shape[1])]
        )
    binary_mask = np.asarray(binary_mask, dtype=bool)

    mean, sd = _standardizer(np.vstack([minority, majority]) if len(majority) else minority)
    Z = (minority - mean) / sd
    neighbor_idx = _self_nearest_neighbors(Z, params.k_neighbors)

    rng = np.random.default_rng(params.seed)
    base = rng.integers(0, len(minority), size=n_needed)
    pick = rng.integers(0, params.k_neighbors, size=n_needed)
    u = rng.uniform(0.0, 1.0, size=n_needed)

    x = minority[base]
    z = minority[neighbor_idx[base, pick]]
    synthetic = x + u[:, None] * (z - x)
    if binary_mask.any():
        cols = np.where(binary_mask)[0]
        synthetic[:, cols] = np.rint(synthetic[:, cols])
    return synthetic


def tomek_links(X: np.ndarray, y: np.ndarray) -> list[tuple[int, int]]:
    """All cross-class mutual-nearest-neighbor index pairs (i < j).

    Nearest neighbors are computed over the whole dataset with ties broken by
    the lower index.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) < 2:
        raise ValidationError("tomek_links needs at least 2 points")
    if len(np.unique(y)) < 2:
        return []
    mean, sd = _standardizer(X)
    Z = (X - mean) / sd
    nn = _self_nearest_neighbors(Z, 1)[:, 0]
    links = []
    for i in range(len(X)):
        j = int(nn[i])
        if i < j and int(nn[j]) == i and y[i] != y[j]:
            links.append((i, j))
    return links


def _nn_over_subset(Z: np.ndarray, alive_idx: np.ndarray, query_idx: np.ndarray) -> np.ndarray:
    """Global index of the nearest alive point (self excluded) per query row."""
    out = np.empty(len(query_idx), dtype=np.int64)
    Za = Z[alive_idx]
    sq_a = (Za**2).sum(axis=1)
    buf = np.empty((min(_CHUNK, len(query_idx)), len(alive_idx)))
    for start in range(0, len(query_idx), _CHUNK):
        q = query_idx[start : start + _CHUNK]
        Zq = Z[q]
        d2 = _chunk_sq_distances(Za, sq_a, Zq, (Zq**2).sum(axis=1), buf)
        self_cols = np.searchsorted(alive_idx, q)
        rows = np.arange(len(q))
        valid = (self_cols < len(alive_idx)) & (alive_idx[self_cols.clip(max=len(alive_idx) - 1)] == q)
        d2[rows[valid], self_cols[valid]] = np.inf
        out[start : start + len(q)] = alive_idx[np.argmin(d2, axis=1)]
    return out


def smote_tomek_with_info(
    X: np.ndarray,
    y: np.ndarray,
    params: ResampleParams,
    binary_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """smote_tomek plus bookkeeping: which augmented rows survived and how
    many synthetics were added. Kept indices below len(X) are original rows.

    Cleaning iterates: removing a link's majority member can create new
    mutual-nearest cross-class pairs, so passes repeat (with incremental
    nearest-neighbor updates) until no Tomek link remains among survivors.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    labels = np.unique(y)
    if len(labels) != 2:
        raise ValidationError("smote_tomek needs exactly two classes")
    counts = {int(lbl): int((y == lbl).sum()) for lbl in labels}
    lbl_a, lbl_b = (int(lbl) for lbl in labels)
    if counts[lbl_a] == counts[lbl_b]:
        minority_label = max(lbl_a, lbl_b)
    else:
        minority_label = lbl_a if counts[lbl_a] < counts[lbl_b] else lbl_b
    majority_label = lbl_b if minority_label == lbl_a else lbl_a

    minority = X[y == minority_label]
    majority = X[y == majority_label]
    synthetic = smote(minority, majority, params, binary_mask=binary_mask)

    X_aug = np.vstack([X, synthetic]) if len(synthetic) else X.copy()
    y_aug = np.concatenate([y, np.full(len(synthetic), minority_label, dtype=np.int64)])

    # Iterate to a fixpoint: within an epoch the standardization is fixed and
    # neighbor updates are incremental; an epoch that removed points rescales
    # on the survivors (removal shifts the standardizer, which can surface new
    # links) and rescans until a full epoch removes nothing. Later epochs
    # avoid full rescans via an epoch-one candidate cache: means cancel in
    # distances and per-axis scale ratios bound how much any distance can
    # move, so a point needs a fresh scan only when its nearest cached
    # candidate cannot be certified against that bound.
    n = len(X_aug)
    alive = np.ones(n, dtype=bool)
    removed = 0
    k_cache = min(8, n - 1)
    cand = cand_radius = sd_cache = None
    epoch = 0
    while True:
        epoch += 1
        alive_idx = np.nonzero(alive)[0]
        if len(alive_idx) < 2 or len(np.unique(y_aug[alive_idx])) < 2:
            break
        mean, sd = _standardizer(X_aug[alive_idx])
        Z = (X_aug - mean) / sd
        nn = np.full(n, -1, dtype=np.int64)
        if epoch == 1:
            cand, cand_d2 = _self_knn_with_distances(Z, k_cache)
            cand_radius = np.sqrt(cand_d2[:, -1])
            sd_cache = sd
            nn[alive_idx] = cand[alive_idx, 0]
        else:
            ratio = sd_cache / sd
            rho_min = float(ratio.min())
            unsafe = []
            for i in alive_idx:
                pool = cand[i][alive[cand[i]]]
                if len(pool) == 0:
                    unsafe.append(i)
                    continue
                diffs = Z[pool] - Z[i]
                d = np.sqrt((diffs**2).sum(axis=1))
                best = int(np.argmin(d))
                if d[best] <= rho_min * cand_radius[i]:
                    nn[i] = pool[best]
                else:
                    unsafe.append(i)
            if unsafe:
                unsafe = np.asarray(unsafe, dtype=np.int64)
                nn[unsafe] = _nn_over_subset(Z, alive_idx, unsafe)
        removed_this_epoch = 0
        while True:
            i = alive_idx
            j = nn[i]
            mutual = (i < j) & (nn[j] == i) & (y_aug[i] != y_aug[j])
            ii, jj = i[mutual], j[mutual]
            drop = np.where(y_aug[ii] == majority_label, ii, jj)
            if len(drop) == 0:
                break
            alive[drop] = False
            removed_this_epoch += len(drop)
            alive_idx = np.nonzero(alive)[0]
            if len(alive_idx) < 2 or len(np.unique(y_aug[alive_idx])) < 2:
                break
            stale = alive_idx[~alive[nn[alive_idx]]]
            if len(stale):
                nn[stale] = _nn_over_subset(Z, alive_idx, stale)
        removed += removed_this_epoch
        if removed_this_epoch == 0:
            break

    keep = np.nonzero(alive)[0]
    info = {
        "kept_indices": keep,
        "n_input": len(X),
        "n_synthetic": len(synthetic),
        "n_removed": removed,
        "minority_label": minority_label,
    }
    return X_aug[keep], y_aug[keep], info


def smote_tomek(
    X: np.ndarray,
    y: np.ndarray,
    params: ResampleParams,
    binary_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """SMOTE the minority class, then drop majority members of Tomek links.

    The minority class is the label with fewer rows (ties: label 1). Original
    minority points and synthetics are never removed.
    """
    X_res, y_res, _ = smote_tomek_with_info(X, y, params, binary_mask=binary_mask)
    return X_res, y_res
