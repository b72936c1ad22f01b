"""Anchor policies, layer policies, dump provenance, and failure modes."""

import numpy as np
import pytest

pytest.importorskip("rollout_harness")

from rirs.features import featurize_pool
from rirs.pool_io import read_pool
from rollout_harness import (
    AnchorOrderViolation,
    InvalidConfig,
    MockBackend,
    NoThinkSpan,
    dump_anchor_pool,
    extract_anchors,
    render_prompt,
)

from mockkit import FIXTURE_COMPLETION, fixture_backend, greedy_config, question, stochastic_config


class TestFixturePositions:
    """Completion tokens: <think>(0) x(1) y(2) </think>(3) answer(4)."""

    def test_think_delimiters(self):
        ext = extract_anchors(question(), greedy_config(anchor_policy="think_delimiters"), fixture_backend())
        assert (ext.start_index, ext.end_index) == (0, 3)
        assert not ext.truncated

    def test_cot_first_last(self):
        ext = extract_anchors(question(), greedy_config(anchor_policy="cot_first_last"), fixture_backend())
        assert (ext.start_index, ext.end_index) == (1, 2)

    def test_states_match_direct_generation(self):
        """Dumped rows equal the raw hidden states at the anchor positions."""
        backend = fixture_backend()
        cfg = greedy_config(anchor_policy="cot_first_last", layer_policy="per_layer")
        ext = extract_anchors(question(), cfg, backend)
        prompt = render_prompt(cfg.template, question().question)
        out = backend.generate(prompt, temperature=0.0, max_new_tokens=cfg.max_new_tokens)
        np.testing.assert_array_equal(
            ext.record.start_states, out.hidden_states[1:, 1, :].astype(np.float64)
        )
        np.testing.assert_array_equal(
            ext.record.end_states, out.hidden_states[1:, 2, :].astype(np.float64)
        )

    def test_averaged_states_are_layer_means(self):
        backend = fixture_backend()
        cfg = greedy_config(anchor_policy="think_delimiters", layer_policy="averaged")
        ext = extract_anchors(question(), cfg, backend)
        prompt = render_prompt(cfg.template, question().question)
        out = backend.generate(prompt, temperature=0.0, max_new_tokens=cfg.max_new_tokens)
        expected = out.hidden_states[1:, 0, :].astype(np.float64).mean(axis=0, keepdims=True)
        np.testing.assert_array_equal(ext.record.start_states, expected)


class TestThinkSpanFailures:
    def test_no_tags_at_all(self):
        backend = MockBackend(script="just an answer \\boxed{1}")
        with pytest.raises(NoThinkSpan):
            extract_anchors(question(), greedy_config(), backend)

    def test_unclosed_span_without_truncation(self):
        backend = MockBackend(script="<think> a b c")
        with pytest.raises(NoThinkSpan):
            extract_anchors(question(), greedy_config(), backend)

    @pytest.mark.parametrize("policy", ["think_delimiters", "cot_first_last"])
    def test_empty_span(self, policy):
        backend = MockBackend(script="<think> </think> \\boxed{1}")
        with pytest.raises(NoThinkSpan):
            extract_anchors(question(), greedy_config(anchor_policy=policy), backend)

    def test_single_token_span_orders_anchors(self):
        """cot_first_last on a one-token CoT collapses t_s == t_e: refuse, never swap."""
        backend = MockBackend(script="<think> x </think> answer")
        with pytest.raises(AnchorOrderViolation):
            extract_anchors(question(), greedy_config(anchor_policy="cot_first_last"), backend)
        ext = extract_anchors(question(), greedy_config(anchor_policy="think_delimiters"), backend)
        assert (ext.start_index, ext.end_index) == (0, 2)

    def test_stochastic_config_rejected(self):
        with pytest.raises(InvalidConfig):
            extract_anchors(question(), stochastic_config(), fixture_backend())


class TestTruncation:
    def _capped(self, policy):
        backend = MockBackend(script="<think> " + "w " * 40 + "</think> \\boxed{1}")
        cfg = greedy_config(anchor_policy=policy, max_new_tokens=12)
        return extract_anchors(question(), cfg, backend), backend, cfg

    @pytest.mark.parametrize("policy", ["think_delimiters", "cot_first_last"])
    def test_end_anchor_at_last_token(self, policy):
        """A capped trace is kept: the end anchor falls on the last emitted token."""
        ext, _, _ = self._capped(policy)
        assert ext.truncated
        assert ext.end_index == 11
        assert ext.start_index == (0 if policy == "think_delimiters" else 1)

    def test_truncated_ids_flagged_in_manifest(self, tmp_path):
        backend = MockBackend(script="<think> " + "w " * 40 + "</think> \\boxed{1}")
        cfg = greedy_config(max_new_tokens=12)
        manifest, _ = dump_anchor_pool(
            [question(0), question(1)], cfg, backend, tmp_path / "pool.json"
        )
        assert manifest.extras["truncated_ids"] == ["q-0000", "q-0001"]

    def test_untruncated_pool_has_empty_flag_list(self, tmp_path):
        manifest, _ = dump_anchor_pool(
            [question(0)], greedy_config(), fixture_backend(), tmp_path / "pool.json"
        )
        assert manifest.extras["truncated_ids"] == []


class TestLayerPolicies:
    def test_averaged_keeps_one_row(self):
        ext = extract_anchors(question(), greedy_config(layer_policy="averaged"), fixture_backend())
        assert ext.record.start_states.shape == (1, 16)

    def test_per_layer_keeps_all_transformer_layers(self):
        backend = fixture_backend(layer_count=6)
        ext = extract_anchors(question(), greedy_config(layer_policy="per_layer"), backend)
        assert ext.record.start_states.shape == (6, 16)

    def test_embedding_layer_excluded_by_default(self):
        """Row 0 of the raw dump is the embedding layer; it stays out unless asked."""
        backend = fixture_backend()
        cfg_off = greedy_config(layer_policy="per_layer")
        cfg_on = greedy_config(layer_policy="per_layer", include_embedding_layer=True)
        off = extract_anchors(question(), cfg_off, backend)
        on = extract_anchors(question(), cfg_on, backend)
        assert off.record.start_states.shape == (4, 16)
        assert on.record.start_states.shape == (5, 16)
        np.testing.assert_array_equal(on.record.start_states[1:], off.record.start_states)

    def test_embedding_flag_recorded_in_manifest(self, tmp_path):
        cfg = greedy_config(layer_policy="per_layer", include_embedding_layer=True)
        manifest, _ = dump_anchor_pool(
            [question()], cfg, fixture_backend(), tmp_path / "pool.json"
        )
        assert manifest.extras["includes_embedding_layer"] is True
        assert manifest.layer_count == 5

    @pytest.mark.parametrize("variant", ["s", "delta", "s_plus_delta"])
    def test_per_layer_and_averaged_featurize_agree(self, tmp_path, variant):
        """Averaging before or after the float32 dump must not move features."""
        for i, policy in enumerate(("per_layer", "averaged")):
            dump_anchor_pool(
                [question(k) for k in range(4)],
                greedy_config(layer_policy=policy),
                MockBackend(),
                tmp_path / f"pool{i}.json",
            )
        per_layer, _ = read_pool(tmp_path / "pool0.json")
        averaged, _ = read_pool(tmp_path / "pool1.json")
        for a, b in zip(featurize_pool(per_layer, variant), featurize_pool(averaged, variant)):
            assert a.instance_id == b.instance_id
            assert abs(a.q - b.q) <= 1e-6 * max(1.0, abs(b.q))
            assert abs(a.q_tilde - b.q_tilde) <= 1e-6
            np.testing.assert_allclose(a.phi, b.phi, rtol=0, atol=1e-6)


class TestGreedyDeterminism:
    def test_bit_identical_dumps(self, tmp_path):
        """Same config, same model: the pool files match byte for byte."""
        instances = [question(i) for i in range(5)]
        for d in ("a", "b"):
            (tmp_path / d).mkdir()
            dump_anchor_pool(
                instances, greedy_config(layer_policy="per_layer"), MockBackend(),
                tmp_path / d / "pool.json",
            )
        assert (tmp_path / "a" / "pool.json").read_bytes() == (
            tmp_path / "b" / "pool.json"
        ).read_bytes()
        assert (tmp_path / "a" / "pool.bin").read_bytes() == (
            tmp_path / "b" / "pool.bin"
        ).read_bytes()


class TestDumpProvenance:
    def test_manifest_records_the_run(self, tmp_path):
        cfg = greedy_config(anchor_policy="cot_first_last")
        manifest, _ = dump_anchor_pool(
            [question(i) for i in range(3)], cfg, MockBackend(), tmp_path / "pool.json",
            pool_id="run-7",
        )
        extras = manifest.extras
        assert manifest.pool_id == "run-7"
        assert extras["model_id"] == "mock-causal-4l"
        assert extras["template"] == "open_ended"
        assert extras["decoding"] == "greedy"
        assert extras["temperature"] == 0.0
        assert extras["anchor_policy"] == "cot_first_last"
        assert extras["capture_point"] == "post_block_residual"

    def test_record_order_equals_input_order(self, tmp_path):
        instances = [question(i) for i in (3, 0, 2)]
        manifest, _ = dump_anchor_pool(
            instances, greedy_config(), MockBackend(), tmp_path / "pool.json"
        )
        assert manifest.instance_ids == ["q-0003", "q-0000", "q-0002"]
        records, _ = read_pool(tmp_path / "pool.json")
        assert [r.instance_id for r in records] == ["q-0003", "q-0000", "q-0002"]

    def test_zero_instances_rejected(self, tmp_path):
        with pytest.raises(InvalidConfig):
            dump_anchor_pool([], greedy_config(), MockBackend(), tmp_path / "pool.json")
