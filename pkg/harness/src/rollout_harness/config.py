"""Harness run configuration and its file loader.

A config fully determines one harness run: which prompt template wraps the
questions, how the model decodes (greedy for anchor dumps, stochastic for
rollout records), where the CoT anchors sit, and whether hidden-state dumps
keep every layer or only the layer mean. Validation happens at construction
so a bad config never reaches the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from .errors import InvalidConfig
from .prompts import PROMPT_TEMPLATES

TEMPLATE_IDS = tuple(sorted(PROMPT_TEMPLATES))
DECODING_MODES = ("greedy", "stochastic")
ANCHOR_POLICIES = ("think_delimiters", "cot_first_last")
LAYER_POLICIES = ("averaged", "per_layer")

GREEDY_TEMPERATURE = 0.0
STOCHASTIC_TEMPERATURE = 0.6
STOCHASTIC_ROLLOUTS = 32
MAX_NEW_TOKENS = 3072


@dataclass(frozen=True)
class Instance:
    """One pool item: a stable identifier and the raw question text."""

    instance_id: str
    question: str


@dataclass(frozen=True)
class HarnessConfig:
    """Everything one run needs besides the model itself.

    ``temperature`` and ``rollouts`` may be left as None to take the mode's
    defaults (greedy: 0.0 / 1; stochastic: 0.6 / 32). Explicit values are
    validated: greedy decoding demands temperature 0 and a single rollout;
    stochastic decoding demands a positive temperature and at least 2.
    """

    model_id: str
    template: str = "open_ended"
    decoding: str = "greedy"
    temperature: float | None = None
    rollouts: int | None = None
    max_new_tokens: int = MAX_NEW_TOKENS
    anchor_policy: str = "think_delimiters"
    layer_policy: str = "averaged"
    include_embedding_layer: bool = False
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.model_id, str) or not self.model_id:
            raise InvalidConfig("model_id must be a nonempty string")
        _check_choice("template", self.template, TEMPLATE_IDS)
        _check_choice("decoding", self.decoding, DECODING_MODES)
        _check_choice("anchor_policy", self.anchor_policy, ANCHOR_POLICIES)
        _check_choice("layer_policy", self.layer_policy, LAYER_POLICIES)
        if not isinstance(self.max_new_tokens, int) or self.max_new_tokens < 1:
            raise InvalidConfig(
                f"max_new_tokens must be a positive integer, got {self.max_new_tokens!r}"
            )
        if not isinstance(self.seed, int):
            raise InvalidConfig(f"seed must be an integer, got {self.seed!r}")

        if self.decoding == "greedy":
            temperature = GREEDY_TEMPERATURE if self.temperature is None else self.temperature
            rollouts = 1 if self.rollouts is None else self.rollouts
            if temperature != 0.0:
                raise InvalidConfig(
                    f"greedy decoding requires temperature 0, got {temperature!r}"
                )
            if rollouts != 1:
                raise InvalidConfig(
                    f"greedy decoding produces exactly one rollout, got {rollouts!r}"
                )
        else:
            temperature = (
                STOCHASTIC_TEMPERATURE if self.temperature is None else self.temperature
            )
            rollouts = STOCHASTIC_ROLLOUTS if self.rollouts is None else self.rollouts
            if not isinstance(temperature, (int, float)) or not temperature > 0.0:
                raise InvalidConfig(
                    f"stochastic decoding requires temperature > 0, got {temperature!r}"
                )
            if not isinstance(rollouts, int) or rollouts < 2:
                raise InvalidConfig(
                    f"stochastic decoding requires at least 2 rollouts, got {rollouts!r}"
                )
        object.__setattr__(self, "temperature", float(temperature))
        object.__setattr__(self, "rollouts", rollouts)


def _check_choice(name: str, value, allowed: tuple) -> None:
    if value not in allowed:
        raise InvalidConfig(f"{name} must be one of {list(allowed)}, got {value!r}")


def load_config(path: str | Path) -> HarnessConfig:
    """Build a config from a YAML or JSON file; unknown keys are rejected."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (yaml.YAMLError, ValueError) as exc:
        raise InvalidConfig(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidConfig("config root must be a mapping")

    known = {f.name for f in fields(HarnessConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InvalidConfig(f"unknown config keys: {', '.join(unknown)}")
    if "model_id" not in data:
        raise InvalidConfig("config must set model_id")
    return HarnessConfig(**data)
