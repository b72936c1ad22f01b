"""Offline rollout harness for the selection engine.

Runs one greedy rollout per instance to dump CoT anchor hidden states, and R
stochastic rollouts per instance to record answers, logprobs, and CoT
embeddings, writing both in the engine's own file formats. A deterministic
mock backend stands in for the model so everything here runs without a GPU;
real runtimes implement the same two-method backend interface.
"""

from .anchors import AnchorExtraction, dump_anchor_pool, extract_anchors, locate_think_span
from .backend import (
    CLOSE_TAG,
    OPEN_TAG,
    Backend,
    GenerationOutput,
    MockBackend,
    detokenize,
    tokenize,
)
from .boxed import extract_boxed
from .config import HarnessConfig, Instance, load_config
from .errors import (
    AnchorOrderViolation,
    GenerationFailure,
    HarnessError,
    InvalidConfig,
    NoBoxedAnswer,
    NoThinkSpan,
)
from .prompts import MULTIPLE_CHOICE, OPEN_ENDED, PROMPT_TEMPLATES, render_prompt
from .rollouts import RolloutCollection, SampleFailure, collect_rollouts, dump_rollouts

__version__ = "0.1.0"

__all__ = [
    "AnchorExtraction",
    "AnchorOrderViolation",
    "Backend",
    "CLOSE_TAG",
    "GenerationFailure",
    "GenerationOutput",
    "HarnessConfig",
    "HarnessError",
    "Instance",
    "InvalidConfig",
    "MULTIPLE_CHOICE",
    "MockBackend",
    "NoBoxedAnswer",
    "NoThinkSpan",
    "OPEN_ENDED",
    "OPEN_TAG",
    "PROMPT_TEMPLATES",
    "RolloutCollection",
    "SampleFailure",
    "collect_rollouts",
    "detokenize",
    "dump_anchor_pool",
    "dump_rollouts",
    "extract_anchors",
    "extract_boxed",
    "load_config",
    "locate_think_span",
    "render_prompt",
    "tokenize",
    "__version__",
]
