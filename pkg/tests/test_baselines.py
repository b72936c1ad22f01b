"""Rollout-score baselines: hand values, bounds, and sort-oracle agreement."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rirs.baselines import (
    SCORE_DIRECTIONS,
    ScoreTable,
    cot_similarity,
    perplexity,
    rank_and_take,
    sc_entropy,
    score_rollouts,
    write_score_table,
)
from rirs.errors import (
    BudgetExceedsPool,
    EmptyRollouts,
    EmptyTokens,
    PositiveLogprob,
    TooFewRollouts,
    UnknownScore,
    ZeroEmbedding,
)
from rirs.pool_io import RolloutRecord


class TestScEntropy:
    def test_degenerate_distribution(self):
        assert sc_entropy(["A"] * 32) == 0.0

    def test_two_point_uniform(self):
        assert abs(sc_entropy(["A"] * 16 + ["B"] * 16) - math.log(2)) < 1e-15

    def test_hand_case_2_1_1(self):
        """counts {A:2, B:1, C:1} -> -(0.5 ln 0.5 + 2 * 0.25 ln 0.25)."""
        expected = -(0.5 * math.log(0.5) + 2 * 0.25 * math.log(0.25))
        assert abs(sc_entropy(["A", "B", "A", "C"]) - expected) < 1e-12
        assert abs(expected - 1.0397207708399179) < 1e-12

    def test_bounds_and_extremes(self):
        """0 <= H <= ln R, with both bounds attained."""
        rng = np.random.default_rng(1)
        for _ in range(50):
            r = int(rng.integers(1, 40))
            answers = [str(int(v)) for v in rng.integers(0, 6, size=r)]
            h = sc_entropy(answers)
            assert -1e-12 <= h <= math.log(r) + 1e-12
        assert sc_entropy(["x"] * 7) == 0.0
        uniform = [str(i) for i in range(9)]
        assert sc_entropy(uniform) == math.log(9)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        answers = [str(int(v)) for v in rng.integers(0, 4, size=20)]
        shuffled = list(answers)
        rng.shuffle(shuffled)
        assert sc_entropy(answers) == sc_entropy(shuffled)

    def test_empty_rejected(self):
        with pytest.raises(EmptyRollouts):
            sc_entropy([])

    @given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=64))
    def test_zero_iff_single_distinct(self, answers):
        h = sc_entropy(answers)
        assert 0.0 <= h <= math.log(len(answers)) + 1e-12
        assert (h == 0.0) == (len(set(answers)) == 1)


class TestCotSimilarity:
    def test_identical_rows(self):
        emb = np.tile([2.0, 1.0, -3.0], (5, 1))
        assert abs(cot_similarity(emb) - 1.0) < 1e-12

    def test_orthogonal_rows(self):
        assert abs(cot_similarity(np.eye(2))) < 1e-15

    def test_hand_case_three_rows(self):
        """(1,0), (0,1), (1,1)/sqrt2 -> mean{0, 1/sqrt2, 1/sqrt2} = 0.4714..."""
        emb = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])  # row scale cancels
        expected = (0.0 + math.sqrt(0.5) + math.sqrt(0.5)) / 3.0
        assert abs(cot_similarity(emb) - expected) < 1e-12
        assert abs(expected - 0.47140452079103173) < 1e-12

    def test_range_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            r = int(rng.integers(2, 10))
            e = int(rng.integers(1, 8))
            emb = rng.normal(size=(r, e))
            v = cot_similarity(emb)
            assert -1.0 - 1e-9 <= v <= 1.0 + 1e-9

    def test_positive_scalings_hit_one(self):
        """Similarity is 1 exactly when rows are positive multiples of one vector."""
        rng = np.random.default_rng(4)
        base = rng.normal(size=6)
        emb = np.stack([c * base for c in (0.5, 2.0, 7.0, 1.0)])
        assert abs(cot_similarity(emb) - 1.0) < 1e-12
        emb_mixed = np.stack([base, -base])
        assert cot_similarity(emb_mixed) < 1.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        emb = rng.normal(size=(6, 4))
        perm = rng.permutation(6)
        assert abs(cot_similarity(emb) - cot_similarity(emb[perm])) < 1e-12

    def test_single_row_rejected(self):
        with pytest.raises(TooFewRollouts):
            cot_similarity(np.ones((1, 3)))

    def test_zero_row_rejected(self):
        with pytest.raises(ZeroEmbedding):
            cot_similarity(np.array([[1.0, 0.0], [0.0, 0.0]]))


class TestPerplexity:
    def test_certain_tokens(self):
        assert perplexity([0.0, 0.0, 0.0]) == 1.0

    def test_half_probability(self):
        assert abs(perplexity([-math.log(2)] * 2) - 2.0) < 1e-12

    def test_hand_case_mean_two(self):
        assert abs(perplexity([-1.0, -2.0, -3.0]) - math.exp(2.0)) < 1e-9

    def test_monotonicity(self):
        """Lowering any single logprob strictly raises perplexity."""
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(1, 20))
            lp = (-rng.random(n)).tolist()
            base = perplexity(lp)
            k = int(rng.integers(0, n))
            lp[k] -= rng.uniform(0.01, 2.0)
            assert perplexity(lp) > base

    def test_empty_rejected(self):
        with pytest.raises(EmptyTokens):
            perplexity([])

    def test_positive_logprob_rejected(self):
        with pytest.raises(PositiveLogprob):
            perplexity([-0.5, 0.2])


class TestRankAndTake:
    def test_higher_first_hand_case(self):
        table = ScoreTable("t", "higher_first", {"a": 3.0, "b": 1.0, "c": 2.0})
        result = rank_and_take(table, 2)
        assert result.selected_ids == ["a", "c"]

    def test_lower_first_all_equal(self):
        table = ScoreTable("t", "lower_first", {"a": 1.0, "b": 1.0, "c": 1.0})
        result = rank_and_take(table, 2)
        assert result.selected_ids == ["a", "b"]

    def test_sort_oracle_random_tables(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            n = int(rng.integers(2, 200))
            budget = int(rng.integers(1, n + 1))
            ids = [f"i{k:04d}" for k in range(n)]
            scores = np.round(rng.normal(size=n), 2)  # rounding plants ties
            direction = "higher_first" if trial % 2 == 0 else "lower_first"
            table = ScoreTable("t", direction, dict(zip(ids, scores.tolist())))
            sign = -1.0 if direction == "higher_first" else 1.0
            expected = [
                ids[i]
                for i in sorted(range(n), key=lambda i: (sign * scores[i], i))[:budget]
            ]
            assert rank_and_take(table, budget).selected_ids == expected

    def test_budget_exceeds_table(self):
        table = ScoreTable("t", "higher_first", {"a": 1.0})
        with pytest.raises(BudgetExceedsPool):
            rank_and_take(table, 2)

    def test_config_echo(self):
        table = ScoreTable("sc_entropy", "higher_first", {"a": 1.0, "b": 0.0})
        result = rank_and_take(table, 1)
        assert result.config["score_name"] == "sc_entropy"
        assert result.config["direction"] == "higher_first"


class TestScoreRollouts:
    def records(self):
        rng = np.random.default_rng(8)
        out = []
        for i in range(12):
            r = int(rng.integers(2, 6))
            out.append(
                RolloutRecord(
                    instance_id=f"q{i:02d}",
                    answers=[str(int(v)) for v in rng.integers(0, 3, size=r)],
                    cot_embeddings=rng.normal(size=(r, 4)),
                    question_token_logprobs=(-rng.random(5)).tolist(),
                    answer_token_logprobs=(-rng.random(3)).tolist(),
                )
            )
        return out

    def test_directions_fixed_per_score(self):
        assert SCORE_DIRECTIONS == {
            "sc_entropy": "higher_first",
            "cot_similarity": "lower_first",
            "q_ppl": "higher_first",
            "a_ppl": "higher_first",
        }

    def test_tables_match_direct_computation(self):
        records = self.records()
        for name, fn in (
            ("sc_entropy", lambda r: sc_entropy(r.answers)),
            ("cot_similarity", lambda r: cot_similarity(r.cot_embeddings)),
            ("q_ppl", lambda r: perplexity(r.question_token_logprobs)),
            ("a_ppl", lambda r: perplexity(r.answer_token_logprobs)),
        ):
            table = score_rollouts(records, name)
            assert list(table.entries) == [r.instance_id for r in records]
            for r in records:
                assert table.entries[r.instance_id] == fn(r)

    def test_unknown_score(self):
        with pytest.raises(UnknownScore):
            score_rollouts(self.records(), "confidence")

    def test_csv_export_round_trips(self, tmp_path):
        import csv

        table = score_rollouts(self.records(), "q_ppl")
        path = tmp_path / "scores.csv"
        write_score_table(table, path)
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(table.entries)
        for row in rows:
            assert float(row["score"]) == table.entries[row["instance_id"]]
            assert row["direction"] == "higher_first"
