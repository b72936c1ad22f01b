"""Shared builders for the harness tests."""

import pytest

pytest.importorskip("rollout_harness")

from rollout_harness import HarnessConfig, Instance, MockBackend

# The canonical two-token CoT completion: delimiters at 0 and 3, CoT at 1..2.
FIXTURE_COMPLETION = "<think> x y </think> answer"


def greedy_config(**overrides):
    base = dict(model_id="mock-causal-4l", decoding="greedy")
    base.update(overrides)
    return HarnessConfig(**base)


def stochastic_config(**overrides):
    base = dict(model_id="mock-causal-4l", decoding="stochastic")
    base.update(overrides)
    return HarnessConfig(**base)


def fixture_backend(**overrides):
    kwargs = dict(script=FIXTURE_COMPLETION)
    kwargs.update(overrides)
    return MockBackend(**kwargs)


def question(i=0):
    return Instance(instance_id=f"q-{i:04d}", question=f"Compute {i} + {i}.")
