"""Model backends: the generation interface and a fully offline mock.

The mock backend stands in for a causal LM plus sentence encoder. Every
output (tokens, per-token logprobs, per-layer hidden states, embeddings) is
a pure function of (model_id, inputs) via blake2b hashing, so runs are
bit-reproducible across processes and platforms with no RNG state at all.
Temperature 0 ignores the sample index, which is exactly the greedy
determinism contract; positive temperature lets the sample index vary the
completion. Hooks (``script``, ``logprob_fn``, ``fail_when``) let tests pin
completions, force hand-computable logprobs, or inject per-sample failures.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import GenerationFailure, InvalidConfig

OPEN_TAG = "<think>"
CLOSE_TAG = "</think>"

# Where in the block the mock pretends to capture activations; real backends
# must report their own so the dump manifest stays auditable.
MOCK_CAPTURE_POINT = "post_block_residual"


def tokenize(text: str) -> list[str]:
    """Whitespace tokens, with the think delimiters always standalone."""
    padded = text.replace(OPEN_TAG, f" {OPEN_TAG} ").replace(CLOSE_TAG, f" {CLOSE_TAG} ")
    return padded.split()


def detokenize(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


@dataclass
class GenerationOutput:
    """One model call: prompt-side evidence plus the generated completion."""

    prompt_tokens: list[str]
    prompt_logprobs: list[float]
    tokens: list[str]
    text: str
    token_logprobs: list[float]
    hidden_states: np.ndarray  # (layer_count + 1, len(tokens), hidden_dim); row 0 is the embedding layer
    truncated: bool


class Backend(Protocol):
    """What the harness needs from a model runtime."""

    model_id: str
    layer_count: int
    hidden_dim: int
    embed_dim: int
    capture_point: str

    def generate(
        self, prompt: str, *, temperature: float, max_new_tokens: int, sample_index: int = 0
    ) -> GenerationOutput: ...

    def embed(self, text: str) -> np.ndarray: ...


def _hash_floats(count: int, parts: tuple[str, ...]) -> np.ndarray:
    """``count`` doubles in [-1, 1), a pure function of the key parts."""
    key = "\x1f".join(parts).encode("utf-8")
    blocks = -(-count // 8)
    raw = b"".join(
        hashlib.blake2b(key, digest_size=64, salt=i.to_bytes(8, "little")).digest()
        for i in range(blocks)
    )
    u = np.frombuffer(raw, dtype="<u8")[:count]
    return (u >> np.uint64(11)).astype(np.float64) * 2.0**-52 - 1.0


def _uniform01(count: int, parts: tuple[str, ...]) -> np.ndarray:
    return (_hash_floats(count, parts) + 1.0) * 0.5


class MockBackend:
    """Deterministic stand-in model; see the module docstring for the hooks."""

    def __init__(
        self,
        model_id: str = "mock-causal-4l",
        layer_count: int = 4,
        hidden_dim: int = 16,
        embed_dim: int = 8,
        script: str | Sequence[str] | Callable[[str, int], str] | None = None,
        logprob_fn: Callable[[str, int], float] | None = None,
        fail_when: Callable[[str, int], bool] | None = None,
    ):
        if layer_count < 1 or hidden_dim < 1 or embed_dim < 1:
            raise InvalidConfig("layer_count, hidden_dim, and embed_dim must be positive")
        self.model_id = model_id
        self.layer_count = layer_count
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.capture_point = MOCK_CAPTURE_POINT
        self._script = script
        self._logprob_fn = logprob_fn
        self._fail_when = fail_when

    # --- generation ---

    def generate(
        self, prompt: str, *, temperature: float, max_new_tokens: int, sample_index: int = 0
    ) -> GenerationOutput:
        if temperature < 0.0:
            raise InvalidConfig(f"temperature must be >= 0, got {temperature}")
        if max_new_tokens < 1:
            raise InvalidConfig(f"max_new_tokens must be positive, got {max_new_tokens}")
        if self._fail_when is not None and self._fail_when(prompt, sample_index):
            raise GenerationFailure(f"backend refused sample {sample_index}")

        # Temperature 0 collapses all samples onto one deterministic decode.
        effective = 0 if temperature == 0.0 else int(sample_index)
        text = self._completion_text(prompt, effective)
        tokens = tokenize(text)
        truncated = len(tokens) > max_new_tokens
        if truncated:
            tokens = tokens[:max_new_tokens]

        prompt_tokens = tokenize(prompt)
        prompt_logprobs = [
            self._logprob(tok, pos, "prompt") for pos, tok in enumerate(prompt_tokens)
        ]
        token_logprobs = [
            self._logprob(tok, pos, "completion") for pos, tok in enumerate(tokens)
        ]
        return GenerationOutput(
            prompt_tokens=prompt_tokens,
            prompt_logprobs=prompt_logprobs,
            tokens=tokens,
            text=detokenize(tokens),
            token_logprobs=token_logprobs,
            hidden_states=self._hidden_states(tokens),
            truncated=truncated,
        )

    def embed(self, text: str) -> np.ndarray:
        """Sentence embedding: same text, same vector, always."""
        return _hash_floats(self.embed_dim, (self.model_id, "embed", text))

    # --- deterministic internals ---

    def _completion_text(self, prompt: str, sample_index: int) -> str:
        script = self._script
        if callable(script):
            return script(prompt, sample_index)
        if isinstance(script, str):
            return script
        if script is not None:
            return script[sample_index % len(script)]
        u = _uniform01(8, (self.model_id, "gen", prompt, str(sample_index)))
        steps = " ".join(f"step{int(v * 1000):03d}" for v in u[2 : 2 + 2 + int(u[0] * 4)])
        answer = int(u[1] * 100)
        return f"{OPEN_TAG} {steps} {CLOSE_TAG} Final answer: \\boxed{{{answer}}}"

    def _logprob(self, token: str, position: int, stream: str) -> float:
        if self._logprob_fn is not None:
            value = float(self._logprob_fn(token, position))
            if value > 0.0:
                raise InvalidConfig(f"logprob_fn returned {value} > 0 for {token!r}")
            return value
        u = _uniform01(1, (self.model_id, "logprob", stream, str(position), token))[0]
        return -0.05 - 2.95 * u

    def _hidden_states(self, tokens: list[str]) -> np.ndarray:
        states = np.empty((self.layer_count + 1, len(tokens), self.hidden_dim), dtype=np.float32)
        for layer in range(self.layer_count + 1):
            for pos, tok in enumerate(tokens):
                row = _hash_floats(
                    self.hidden_dim, (self.model_id, "hidden", str(layer), str(pos), tok)
                )
                states[layer, pos, :] = row.astype(np.float32)
        return states
