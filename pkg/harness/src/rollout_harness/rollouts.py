"""Stochastic rollout collection for the baseline scorers.

R sampled completions per instance; each successful sample contributes a
boxed final answer and a CoT embedding. Question-side and answer-side token
logprobs come from the first successful sample (they score the instance, not
any particular sample). A sample fails, and R shrinks by one in the record,
when the backend refuses it or its completion lacks a think span or a boxed
answer; failures are kept alongside the record so callers can audit them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from rirs.pool_io import RolloutRecord, write_rollout_records

from .anchors import locate_think_span
from .backend import Backend, GenerationOutput, detokenize
from .boxed import extract_boxed
from .config import HarnessConfig, Instance
from .errors import GenerationFailure, HarnessError, InvalidConfig
from .prompts import render_prompt


@dataclass
class SampleFailure:
    """Why one of the R samples contributed nothing to the record."""

    sample_index: int
    error: str
    detail: str


@dataclass
class RolloutCollection:
    """An engine-format rollout record plus its per-sample failure audit."""

    record: RolloutRecord
    failures: list[SampleFailure]


def _answer_logprobs(out: GenerationOutput) -> list[float]:
    """Logprobs of the tokens after the think span closes (the answer segment)."""
    _, t_close = locate_think_span(out.tokens)
    if t_close is None:
        raise GenerationFailure("sample has no closed think span")
    return list(out.token_logprobs[t_close + 1 :])


def _cot_text(out: GenerationOutput) -> str:
    t_open, t_close = locate_think_span(out.tokens)
    if t_close is None:
        raise GenerationFailure("sample has no closed think span")
    return detokenize(out.tokens[t_open + 1 : t_close])


def collect_rollouts(
    instance: Instance, config: HarnessConfig, backend: Backend
) -> RolloutCollection:
    """Sample R completions for one instance and build its rollout record."""
    if config.decoding != "stochastic":
        raise InvalidConfig("rollout collection requires a stochastic decoding config")
    prompt = render_prompt(config.template, instance.question)

    answers: list[str] = []
    embeddings: list[np.ndarray] = []
    failures: list[SampleFailure] = []
    question_logprobs: list[float] = []
    answer_logprobs: list[float] = []
    question_len = 0
    response_len = 0

    for i in range(config.rollouts):
        try:
            out = backend.generate(
                prompt,
                temperature=config.temperature,
                max_new_tokens=config.max_new_tokens,
                sample_index=i,
            )
            answer = extract_boxed(out.text)
            cot = _cot_text(out)
        except HarnessError as exc:
            failures.append(SampleFailure(sample_index=i, error=exc.code, detail=str(exc)))
            continue
        if not answers:
            question_logprobs = list(out.prompt_logprobs)
            answer_logprobs = _answer_logprobs(out)
            question_len = len(out.prompt_tokens)
            response_len = len(out.tokens)
        answers.append(answer)
        embeddings.append(backend.embed(cot))

    if not answers:
        raise GenerationFailure(
            f"all {config.rollouts} samples failed for {instance.instance_id!r}"
        )
    record = RolloutRecord(
        instance_id=instance.instance_id,
        answers=answers,
        cot_embeddings=np.asarray(embeddings, dtype=np.float64),
        question_token_logprobs=question_logprobs,
        answer_token_logprobs=answer_logprobs,
        question_token_len=question_len,
        response_token_len=response_len,
    )
    return RolloutCollection(record=record, failures=failures)


def dump_rollouts(
    instances: list[Instance],
    config: HarnessConfig,
    backend: Backend,
    path: str | Path,
) -> list[RolloutCollection]:
    """Collect rollouts for every instance and write engine-readable JSONL.

    Record order equals input order.
    """
    if not instances:
        raise InvalidConfig("cannot dump rollouts for zero instances")
    collections = [collect_rollouts(inst, config, backend) for inst in instances]
    write_rollout_records([c.record for c in collections], path)
    return collections
