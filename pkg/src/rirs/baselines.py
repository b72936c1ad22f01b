"""Difficulty / uncertainty scores computed from stochastic rollout evidence.

Three per-instance signals: self-consistency entropy over the empirical final
answer distribution, mean pairwise cosine similarity among sampled CoT
embeddings, and perplexity exp(-mean log-probability) of a token span
(question tokens or generated-answer tokens, depending on which list is fed
in). Entropy and perplexity use the natural log throughout.

Each score has a fixed ranking direction; ``rank_and_take`` turns any score
table into a budgeted selection with lowest-pool-index tie-breaking.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BudgetExceedsPool,
    EmptyPool,
    EmptyRollouts,
    EmptyTokens,
    InvalidParams,
    PositiveLogprob,
    TooFewRollouts,
    UnknownScore,
    ZeroEmbedding,
)
from .pool_io import RolloutRecord
from .select import SelectionResult, SelectionStep, TIE_BREAK

HIGHER_FIRST = "higher_first"
LOWER_FIRST = "lower_first"

# Canonical ranking direction per score: uncertain/difficult instances rank
# first, and low CoT similarity means inconsistent reasoning.
SCORE_DIRECTIONS = {
    "sc_entropy": HIGHER_FIRST,
    "cot_similarity": LOWER_FIRST,
    "q_ppl": HIGHER_FIRST,
    "a_ppl": HIGHER_FIRST,
}


@dataclass
class ScoreTable:
    score_name: str
    direction: str
    entries: dict[str, float]  # instance_id -> score, in pool order


def sc_entropy(answers: list[str]) -> float:
    """Shannon entropy (nats) of the empirical answer distribution.

    Answers are grouped by exact string match; extraction/normalization is the
    producer's job. Computed as ln(T) - sum(c*ln(c))/T, which is algebraically
    -sum(p*ln(p)) but hits both extremes exactly: a single answer group returns
    0.0 and T distinct answers return ln(T) with no rounding residue.
    """
    if not answers:
        raise EmptyRollouts("cannot compute answer entropy with zero rollouts")
    counts = Counter(answers)
    if len(counts) == 1:
        return 0.0
    total = len(answers)
    return math.log(total) - math.fsum(c * math.log(c) for c in counts.values()) / total


def cot_similarity(embeddings: np.ndarray) -> float:
    """Mean pairwise cosine similarity over all R(R-1)/2 embedding pairs."""
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2 or emb.shape[0] < 2:
        raise TooFewRollouts(
            f"pairwise similarity needs at least 2 rollouts, got shape {emb.shape}"
        )
    norms = np.linalg.norm(emb, axis=1)
    if (norms == 0).any():
        raise ZeroEmbedding("cosine similarity undefined for an all-zero embedding")
    unit = emb / norms[:, None]
    gram = unit @ unit.T
    r = emb.shape[0]
    iu = np.triu_indices(r, k=1)
    return float(gram[iu].mean())


def perplexity(token_logprobs: list[float]) -> float:
    """exp(-mean(logprobs)); always >= 1 for valid log-probabilities."""
    if len(token_logprobs) == 0:
        raise EmptyTokens("cannot compute perplexity of an empty token span")
    arr = np.asarray(token_logprobs, dtype=np.float64)
    if (arr > 0).any():
        raise PositiveLogprob(f"log-probabilities must be <= 0, got max {arr.max()}")
    return float(math.exp(-arr.mean()))


def score_rollouts(records: list[RolloutRecord], score_name: str) -> ScoreTable:
    """Build a ScoreTable for one named score over all records, pool order."""
    if score_name not in SCORE_DIRECTIONS:
        raise UnknownScore(
            f"unknown score {score_name!r}, expected one of {sorted(SCORE_DIRECTIONS)}"
        )
    entries: dict[str, float] = {}
    for record in records:
        if score_name == "sc_entropy":
            value = sc_entropy(record.answers)
        elif score_name == "cot_similarity":
            value = cot_similarity(record.cot_embeddings)
        elif score_name == "q_ppl":
            value = perplexity(record.question_token_logprobs)
        else:
            value = perplexity(record.answer_token_logprobs)
        entries[record.instance_id] = value
    return ScoreTable(
        score_name=score_name,
        direction=SCORE_DIRECTIONS[score_name],
        entries=entries,
    )


def rank_and_take(table: ScoreTable, budget: int) -> SelectionResult:
    """Sort by the table's direction, break ties by pool index, take B."""
    n = len(table.entries)
    if n == 0:
        raise EmptyPool("score table has no entries")
    if budget < 1:
        raise InvalidParams(f"budget must be >= 1, got {budget}")
    if budget > n:
        raise BudgetExceedsPool(f"budget {budget} exceeds table size {n}")
    if table.direction not in (HIGHER_FIRST, LOWER_FIRST):
        raise InvalidParams(f"unknown direction {table.direction!r}")

    ids = list(table.entries)
    scores = np.array([table.entries[i] for i in ids], dtype=np.float64)
    key = -scores if table.direction == HIGHER_FIRST else scores
    order = np.argsort(key, kind="stable")[:budget]

    steps = [
        SelectionStep(
            step=rank,
            instance_id=ids[int(idx)],
            score=float(scores[int(idx)]),
        )
        for rank, idx in enumerate(order, start=1)
    ]
    return SelectionResult(
        selected_ids=[ids[int(i)] for i in order],
        steps=steps,
        config={
            "method": "rank_and_take",
            "score_name": table.score_name,
            "direction": table.direction,
            "budget": budget,
            "tie_break": TIE_BREAK,
        },
    )


def write_score_table(table: ScoreTable, path: str | Path) -> None:
    """Export as CSV: instance_id, score_name, score, direction."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "score_name", "score", "direction"])
        for instance_id, score in table.entries.items():
            writer.writerow([instance_id, table.score_name, repr(score), table.direction])
