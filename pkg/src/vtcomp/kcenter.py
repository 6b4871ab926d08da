"""Greedy k-center token retention and its validation oracles.

The production path (`greedy_kcenter`) keeps one running max-similarity
vector and costs O(n*k*d). The oracles deliberately avoid that incremental
state: `oracle_greedy` recomputes every candidate/selected similarity from
scratch at each step, and `optimal_kcenter_radius` enumerates all k-subsets
to produce the ground-truth covering radius for the 2-approximation check.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InstanceTooLarge, InvalidK
from .tensors import normalize_rows

ORACLE_MAX_N = 512
EXHAUSTIVE_MAX_N = 12
EXHAUSTIVE_MAX_K = 5


@dataclass(frozen=True)
class RetentionSet:
    """Ordered selection of visual-token indices, pivot first.

    ``trace`` pairs each selected index with its max similarity to the set
    at the moment of selection; the pivot carries -1.0 (empty set). The
    trace values are non-decreasing by construction of the greedy rule.
    """

    indices: tuple[int, ...]
    trace: tuple[tuple[int, float], ...]

    def __len__(self) -> int:
        return len(self.indices)


def _validate(n: int, pivot: int, k: int) -> None:
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} outside [1, {n}]")
    if not 0 <= pivot < n:
        raise InvalidK(f"pivot index {pivot} outside [0, {n})")


def _pairwise_scores(v: np.ndarray, use_cosine: bool) -> np.ndarray:
    """Rows prepared so that row-dot-products yield the similarity in use."""
    if use_cosine:
        return normalize_rows(v, "greedy_kcenter")
    return np.asarray(v, dtype=np.float64)


def greedy_kcenter(v: np.ndarray, pivot: int, k: int, use_cosine: bool = True) -> RetentionSet:
    """Select k tokens by repeatedly taking the candidate with the smallest
    maximum similarity to the current set. Ties break to the lowest index.

    ``use_cosine=False`` switches the similarity to the raw dot product for
    fidelity experiments; the default is the normalized cosine form.
    """
    v = np.asarray(v)
    n = v.shape[0]
    _validate(n, pivot, k)
    rows = _pairwise_scores(v, use_cosine)

    s = rows @ rows[pivot]
    if use_cosine:
        np.clip(s, -1.0, 1.0, out=s)
    selected = np.zeros(n, dtype=bool)
    selected[pivot] = True
    indices = [pivot]
    trace = [(pivot, -1.0)]

    for _ in range(k - 1):
        masked = np.where(selected, np.inf, s)
        c = int(np.argmin(masked))
        trace.append((c, float(s[c])))
        indices.append(c)
        selected[c] = True
        update = rows @ rows[c]
        if use_cosine:
            np.clip(update, -1.0, 1.0, out=update)
        np.maximum(s, update, out=s)

    return RetentionSet(indices=tuple(indices), trace=tuple(trace))


def oracle_greedy(v: np.ndarray, pivot: int, k: int, use_cosine: bool = True) -> RetentionSet:
    """Same contract as greedy_kcenter, recomputed without incremental state.

    At every step the max similarity of each remaining candidate to each
    already-selected token is evaluated afresh. Guarded to n <= 512.
    """
    v = np.asarray(v)
    n = v.shape[0]
    if n > ORACLE_MAX_N:
        raise InstanceTooLarge(f"oracle_greedy: n={n} exceeds guard {ORACLE_MAX_N}")
    _validate(n, pivot, k)
    rows = _pairwise_scores(v, use_cosine)

    indices = [pivot]
    trace = [(pivot, -1.0)]
    selected = np.zeros(n, dtype=bool)
    selected[pivot] = True
    for _ in range(k - 1):
        chosen = np.flatnonzero(selected)
        best_idx = -1
        best_val = np.inf
        for cand in range(n):
            if selected[cand]:
                continue
            sims = rows[chosen] @ rows[cand]
            if use_cosine:
                sims = np.clip(sims, -1.0, 1.0)
            max_sim = float(np.max(sims))
            if max_sim < best_val:
                best_val = max_sim
                best_idx = cand
        indices.append(best_idx)
        trace.append((best_idx, best_val))
        selected[best_idx] = True

    return RetentionSet(indices=tuple(indices), trace=tuple(trace))


def covering_radius(v: np.ndarray, centers) -> float:
    """Max over tokens of the chordal distance to the nearest center.

    Chordal distance is the Euclidean distance between unit-normalized
    rows; farthest-point order under it matches greedy order under
    min-max cosine similarity.
    """
    rows = normalize_rows(v, "covering_radius")
    centers = list(centers)
    diffs = rows[:, None, :] - rows[None, centers, :]
    dists = np.sqrt(np.einsum("ijk,ijk->ij", diffs, diffs))
    return float(dists.min(axis=1).max())


def optimal_kcenter_radius(v: np.ndarray, k: int) -> float:
    """Exact optimum of the k-center covering radius in chordal distance.

    Brute force over all C(n, k) center subsets; guarded to n <= 12, k <= 5.
    """
    v = np.asarray(v)
    n = v.shape[0]
    if n > EXHAUSTIVE_MAX_N or k > EXHAUSTIVE_MAX_K:
        raise InstanceTooLarge(
            f"optimal_kcenter_radius: n={n}, k={k} exceeds guard (n <= {EXHAUSTIVE_MAX_N}, k <= {EXHAUSTIVE_MAX_K})")
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} outside [1, {n}]")
    if k == n:
        return 0.0

    rows = normalize_rows(v, "optimal_kcenter_radius")
    diffs = rows[:, None, :] - rows[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diffs, diffs))
    best = np.inf
    for subset in combinations(range(n), k):
        r = dist[:, subset].min(axis=1).max()
        if r < best:
            best = r
    return float(best)
