"""Greedy anchor extraction and pool dumping.

One greedy rollout per instance; the anchor pair (t_s, t_e) marks the CoT
span in the completion token stream. Two policies: ``think_delimiters``
anchors on the delimiter tokens themselves, ``cot_first_last`` on the first
and last tokens strictly inside the span. Hidden states at the two anchors
are dumped for every transformer layer or as the layer mean, in the engine's
pool format, so the engine ingests harness output unchanged.

A completion that hits the generation cap before closing its think span is
still dumped (end anchor at the last emitted token) but its id is flagged in
the manifest; dropping such traces is downstream policy, not the harness's.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from rirs.pool_io import AnchorRecord, PoolManifest, write_pool

from .backend import CLOSE_TAG, OPEN_TAG, Backend, GenerationOutput
from .config import HarnessConfig, Instance
from .errors import AnchorOrderViolation, InvalidConfig, NoThinkSpan
from .prompts import render_prompt


@dataclass
class AnchorExtraction:
    """An engine-format record plus the provenance the pool file cannot hold."""

    record: AnchorRecord
    start_index: int
    end_index: int
    truncated: bool
    completion_tokens: list[str]


def locate_think_span(tokens: list[str]) -> tuple[int, int | None]:
    """Indices of the open delimiter and its closing mate (None if unclosed)."""
    try:
        t_open = tokens.index(OPEN_TAG)
    except ValueError:
        raise NoThinkSpan("completion has no <think> delimiter") from None
    for i in range(t_open + 1, len(tokens)):
        if tokens[i] == CLOSE_TAG:
            return t_open, i
    return t_open, None


def _anchor_indices(
    tokens: list[str], policy: str, truncated: bool
) -> tuple[int, int, bool]:
    """Resolve (t_s, t_e, flagged) for one completion under ``policy``."""
    t_open, t_close = locate_think_span(tokens)
    if t_close is None and not truncated:
        raise NoThinkSpan("think span never closes and generation was not truncated")
    if t_close is not None and t_close == t_open + 1:
        raise NoThinkSpan("empty think span")

    capped = t_close is None
    if policy == "think_delimiters":
        t_s = t_open
        t_e = t_close if t_close is not None else len(tokens) - 1
    else:  # cot_first_last
        t_s = t_open + 1
        t_e = t_close - 1 if t_close is not None else len(tokens) - 1
    if not t_s < t_e:
        raise AnchorOrderViolation(
            f"anchor indices must satisfy t_s < t_e, got ({t_s}, {t_e})"
        )
    return t_s, t_e, capped


def _anchor_states(out: GenerationOutput, index: int, config: HarnessConfig) -> np.ndarray:
    """(L, D) hidden-state rows at one token position, per the layer policy."""
    hidden = out.hidden_states
    layers = hidden if config.include_embedding_layer else hidden[1:]
    states = layers[:, index, :].astype(np.float64)
    if config.layer_policy == "averaged":
        return states.mean(axis=0, keepdims=True)
    return states


def extract_anchors(
    instance: Instance, config: HarnessConfig, backend: Backend
) -> AnchorExtraction:
    """Run the greedy decode for one instance and capture both anchor states."""
    if config.decoding != "greedy":
        raise InvalidConfig("anchor extraction requires a greedy decoding config")
    prompt = render_prompt(config.template, instance.question)
    out = backend.generate(
        prompt,
        temperature=config.temperature,
        max_new_tokens=config.max_new_tokens,
        sample_index=0,
    )
    t_s, t_e, truncated = _anchor_indices(out.tokens, config.anchor_policy, out.truncated)
    record = AnchorRecord(
        instance_id=instance.instance_id,
        start_states=_anchor_states(out, t_s, config),
        end_states=_anchor_states(out, t_e, config),
    )
    return AnchorExtraction(
        record=record,
        start_index=t_s,
        end_index=t_e,
        truncated=truncated,
        completion_tokens=list(out.tokens),
    )


def dump_anchor_pool(
    instances: list[Instance],
    config: HarnessConfig,
    backend: Backend,
    manifest_path: str | Path,
    pool_id: str = "anchor-pool",
) -> tuple[PoolManifest, list[AnchorExtraction]]:
    """Extract anchors for every instance and write an engine-readable pool.

    Record order equals input order. The manifest carries the run provenance
    (model, template, policies, capture point) and the ids of traces that hit
    the generation cap.
    """
    if not instances:
        raise InvalidConfig("cannot dump a pool from zero instances")
    extractions = [extract_anchors(inst, config, backend) for inst in instances]

    layer_count = extractions[0].record.start_states.shape[0]
    manifest = PoolManifest(
        pool_id=pool_id,
        instance_count=len(extractions),
        hidden_dim=backend.hidden_dim,
        layer_count=layer_count,
        instance_ids=[e.record.instance_id for e in extractions],
        extras={
            "model_id": backend.model_id,
            "template": config.template,
            "decoding": config.decoding,
            "temperature": config.temperature,
            "max_new_tokens": config.max_new_tokens,
            "anchor_policy": config.anchor_policy,
            "layer_policy": config.layer_policy,
            "includes_embedding_layer": config.include_embedding_layer,
            "capture_point": backend.capture_point,
            "truncated_ids": [e.record.instance_id for e in extractions if e.truncated],
        },
    )
    write_pool([e.record for e in extractions], manifest, manifest_path)
    return manifest, extractions
