"""Budgeted subset selection over coverage features.

Implements the quality-weighted farthest-first rule (pick the highest-utility
instance first, then repeatedly the argmax of q_tilde(x) * d(x, S), where
d is the Euclidean distance to the nearest selected feature) plus the
comparison selectors: plain farthest-first, Top-K utility, k-means centers,
and seeded uniform sampling.

Determinism contract: every method except ``random`` is bitwise deterministic
across runs and across thread counts; ``random`` and ``kmeans_center`` are
deterministic given their seed. Ties always break toward the lowest pool
index. Distances are computed row-wise (never via matrix-product identities),
so chunking the rows across threads cannot change a single bit of the result.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import BudgetExceedsPool, DimMismatch, EmptyPool, InvalidParams
from .features import RirsFeatures

METHODS = ("qwff", "farthest_first", "topk_utility", "kmeans_center", "random")

TIE_BREAK = "lowest pool index"

# Rows per work unit for threaded distance updates. Fixed (not derived from
# the thread count) so the arithmetic is identical at any parallelism degree.
_CHUNK_ROWS = 16384

_KMEANS_MAX_ITER = 100
_KMEANS_TOL = 1e-6


@dataclass
class SelectionConfig:
    budget: int
    method: str
    feature_variant: str = "s_plus_delta"
    seed: int = 0
    tie_break: str = TIE_BREAK


@dataclass
class SelectionStep:
    """One greedy pick: 1-based step, chosen id, and the quantities scored.

    ``distance`` is None when no selected set existed yet (the first pick),
    and ``score`` is whatever the method maximized at that step.
    """

    step: int
    instance_id: str
    q_tilde: float | None = None
    distance: float | None = None
    score: float | None = None


@dataclass
class SelectionResult:
    selected_ids: list[str]
    steps: list[SelectionStep]
    config: dict = field(default_factory=dict)


def _check_budget(n: int, budget: int) -> None:
    if n == 0:
        raise EmptyPool("cannot select from an empty pool")
    if budget < 1:
        raise InvalidParams(f"budget must be >= 1, got {budget}")
    if budget > n:
        raise BudgetExceedsPool(f"budget {budget} exceeds pool size {n}")


def _stack_features(features: list[RirsFeatures]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    dims = {f.phi.shape for f in features}
    if len(dims) > 1:
        raise DimMismatch(f"coverage features disagree on dimension: {sorted(dims)}")
    phi = np.stack([np.asarray(f.phi, dtype=np.float64) for f in features])
    q_tilde = np.array([f.q_tilde for f in features], dtype=np.float64)
    ids = [f.instance_id for f in features]
    return phi, q_tilde, ids


def _row_dists(block: np.ndarray, point: np.ndarray) -> np.ndarray:
    diff = block - point
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _update_min_dists(
    phi: np.ndarray, point: np.ndarray, min_d: np.ndarray, threads: int
) -> None:
    """min_d <- min(min_d, ||phi - point||) in place, chunk-invariant."""
    n = phi.shape[0]
    if threads <= 1 or n <= _CHUNK_ROWS:
        np.minimum(min_d, _row_dists(phi, point), out=min_d)
        return

    def work(a: int, b: int) -> None:
        np.minimum(min_d[a:b], _row_dists(phi[a:b], point), out=min_d[a:b])

    bounds = list(range(0, n, _CHUNK_ROWS))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda a: work(a, min(a + _CHUNK_ROWS, n)), bounds))


def _greedy_coverage(
    phi: np.ndarray,
    first: int,
    budget: int,
    threads: int,
    weights: np.ndarray | None,
) -> tuple[list[int], list[float], list[float]]:
    """Shared greedy loop: maximize d(x, S), optionally weighted per instance.

    Returns (picked indices, picked distances, picked scores); the first
    entry's distance/score slots are not meaningful and hold NaN.
    """
    n = phi.shape[0]
    picked = [first]
    distances = [float("nan")]
    scores = [float("nan")]
    min_d = np.full(n, np.inf)
    selected = np.zeros(n, dtype=bool)
    selected[first] = True

    for _ in range(budget - 1):
        _update_min_dists(phi, phi[picked[-1]], min_d, threads)
        objective = min_d if weights is None else weights * min_d
        masked = np.where(selected, -np.inf, objective)
        nxt = int(np.argmax(masked))  # first occurrence = lowest pool index
        picked.append(nxt)
        distances.append(float(min_d[nxt]))
        scores.append(float(objective[nxt]))
        selected[nxt] = True
    return picked, distances, scores


def _config_echo(method: str, budget: int, features: list[RirsFeatures], **extra) -> dict:
    echo = {
        "method": method,
        "budget": budget,
        "feature_variant": features[0].variant if features else None,
        "tie_break": TIE_BREAK,
    }
    echo.update(extra)
    return echo


def qwff_select(
    features: list[RirsFeatures], budget: int, threads: int = 1
) -> SelectionResult:
    """Quality-weighted farthest-first selection.

    The first pick is the argmax of q_tilde; every later pick is the argmax
    over remaining instances of q_tilde(x) * d(x, S) with d the Euclidean
    min-distance to the selected coverage features.
    """
    _check_budget(len(features), budget)
    phi, q_tilde, ids = _stack_features(features)

    first = int(np.argmax(q_tilde))
    picked, distances, _ = _greedy_coverage(phi, first, budget, threads, weights=q_tilde)

    steps = [
        SelectionStep(
            step=1,
            instance_id=ids[first],
            q_tilde=float(q_tilde[first]),
            distance=None,
            score=float(q_tilde[first]),
        )
    ]
    for rank, idx in enumerate(picked[1:], start=2):
        d = distances[rank - 1]
        steps.append(
            SelectionStep(
                step=rank,
                instance_id=ids[idx],
                q_tilde=float(q_tilde[idx]),
                distance=d,
                score=float(q_tilde[idx]) * d,
            )
        )
    return SelectionResult(
        selected_ids=[ids[i] for i in picked],
        steps=steps,
        config=_config_echo("qwff", budget, features),
    )


def farthest_first_select(
    features: list[RirsFeatures], budget: int, threads: int = 1
) -> SelectionResult:
    """Plain farthest-first traversal (greedy k-center).

    Seeded deterministically with the instance farthest from the feature
    centroid; every later pick maximizes the min-distance to the selected set.
    """
    _check_budget(len(features), budget)
    phi, q_tilde, ids = _stack_features(features)

    centroid = phi.mean(axis=0)
    first = int(np.argmax(_row_dists(phi, centroid)))
    picked, distances, _ = _greedy_coverage(phi, first, budget, threads, weights=None)

    steps = [
        SelectionStep(step=1, instance_id=ids[first], q_tilde=float(q_tilde[first]))
    ]
    for rank, idx in enumerate(picked[1:], start=2):
        d = distances[rank - 1]
        steps.append(
            SelectionStep(
                step=rank,
                instance_id=ids[idx],
                q_tilde=float(q_tilde[idx]),
                distance=d,
                score=d,
            )
        )
    return SelectionResult(
        selected_ids=[ids[i] for i in picked],
        steps=steps,
        config=_config_echo(
            "farthest_first", budget, features, seed_rule="farthest_from_centroid"
        ),
    )


def topk_utility_select(features: list[RirsFeatures], budget: int) -> SelectionResult:
    """The B largest q_tilde values, descending, ties by lowest pool index."""
    _check_budget(len(features), budget)
    q_tilde = np.array([f.q_tilde for f in features], dtype=np.float64)
    order = np.argsort(-q_tilde, kind="stable")[:budget]

    steps = []
    ids = []
    for rank, idx in enumerate(order, start=1):
        f = features[int(idx)]
        ids.append(f.instance_id)
        steps.append(
            SelectionStep(
                step=rank, instance_id=f.instance_id, q_tilde=f.q_tilde, score=f.q_tilde
            )
        )
    return SelectionResult(
        selected_ids=ids,
        steps=steps,
        config=_config_echo("topk_utility", budget, features),
    )


def _kmeans_pp_init(phi: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding. Degenerate pools (all residual distances zero)
    fall back to the lowest-index unchosen point."""
    n = phi.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _row_dists(phi, phi[chosen[0]]) ** 2
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    while len(chosen) < k:
        total = float(d2.sum())
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
            if taken[idx]:  # can only happen via float round-off; pick fresh
                idx = int(np.argmin(taken))
        else:
            idx = int(np.argmin(taken))
        chosen.append(idx)
        taken[idx] = True
        np.minimum(d2, _row_dists(phi, phi[idx]) ** 2, out=d2)
    return phi[chosen].copy()


def _point_center_dists(phi: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(N, k) Euclidean distances, computed row-wise per center column."""
    out = np.empty((phi.shape[0], centers.shape[0]))
    for j in range(centers.shape[0]):
        out[:, j] = _row_dists(phi, centers[j])
    return out


def kmeans_center_select(
    features: list[RirsFeatures], budget: int, seed: int = 0
) -> SelectionResult:
    """Select the pool instance nearest each of B k-means centroids.

    Lloyd iterations with k-means++ init, at most 100 rounds, converged when
    no centroid moves more than 1e-6. Empty clusters are re-seeded with the
    point currently farthest from its assigned centroid. If two centroids
    share a nearest instance, the later centroid takes its next-nearest
    unselected instance.
    """
    _check_budget(len(features), budget)
    phi, q_tilde, ids = _stack_features(features)
    rng = np.random.default_rng(seed)

    centers = _kmeans_pp_init(phi, budget, rng)
    assign = np.zeros(phi.shape[0], dtype=np.int64)
    for _ in range(_KMEANS_MAX_ITER):
        dists = _point_center_dists(phi, centers)
        assign = np.argmin(dists, axis=1)
        point_dist = dists[np.arange(phi.shape[0]), assign]

        new_centers = centers.copy()
        for j in range(budget):
            members = assign == j
            if members.any():
                new_centers[j] = phi[members].mean(axis=0)
            else:
                runaway = int(np.argmax(point_dist))
                new_centers[j] = phi[runaway]
                point_dist[runaway] = 0.0

        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if shift <= _KMEANS_TOL:
            break

    dists = _point_center_dists(phi, centers)
    selected: list[int] = []
    taken = np.zeros(phi.shape[0], dtype=bool)
    steps = []
    for j in range(budget):
        order = np.argsort(dists[:, j], kind="stable")
        idx = next(int(i) for i in order if not taken[i])
        taken[idx] = True
        selected.append(idx)
        steps.append(
            SelectionStep(
                step=j + 1,
                instance_id=ids[idx],
                q_tilde=float(q_tilde[idx]),
                distance=float(dists[idx, j]),
            )
        )
    return SelectionResult(
        selected_ids=[ids[i] for i in selected],
        steps=steps,
        config=_config_echo("kmeans_center", budget, features, seed=seed),
    )


def random_select(ids: list[str], budget: int, seed: int = 0) -> SelectionResult:
    """Uniform sample without replacement from a seeded generator."""
    _check_budget(len(ids), budget)
    rng = np.random.default_rng(seed)
    picked = rng.permutation(len(ids))[:budget]
    steps = [
        SelectionStep(step=rank, instance_id=ids[int(idx)])
        for rank, idx in enumerate(picked, start=1)
    ]
    return SelectionResult(
        selected_ids=[ids[int(i)] for i in picked],
        steps=steps,
        config={
            "method": "random",
            "budget": budget,
            "seed": seed,
            "tie_break": TIE_BREAK,
        },
    )


def run_selection(
    features: list[RirsFeatures],
    config: SelectionConfig,
    threads: int = 1,
) -> SelectionResult:
    """Dispatch on ``config.method``."""
    if config.method == "qwff":
        return qwff_select(features, config.budget, threads=threads)
    if config.method == "farthest_first":
        return farthest_first_select(features, config.budget, threads=threads)
    if config.method == "topk_utility":
        return topk_utility_select(features, config.budget)
    if config.method == "kmeans_center":
        return kmeans_center_select(features, config.budget, seed=config.seed)
    if config.method == "random":
        return random_select([f.instance_id for f in features], config.budget, config.seed)
    raise InvalidParams(f"unknown method {config.method!r}, expected one of {METHODS}")


def result_to_dict(result: SelectionResult) -> dict:
    return {
        "selected_ids": list(result.selected_ids),
        "steps": [asdict(s) for s in result.steps],
        "config": dict(result.config),
    }


def write_selection(result: SelectionResult, json_path: str | Path, ids_path: str | Path) -> None:
    """Persist a result as JSON (ids + trace + config echo) and flat id lines."""
    Path(json_path).write_text(
        json.dumps(result_to_dict(result), indent=2) + "\n", encoding="utf-8"
    )
    Path(ids_path).write_text(
        "\n".join(result.selected_ids) + "\n", encoding="utf-8"
    )
