"""Reasoning-induced representation shift (RIRS) features.

For each instance we reduce the per-layer anchor states to layer means s and
e, take the shift delta = e - s, score utility as q = ||delta||_2 with the
monotone transform q_tilde = ln(1 + q), and build a unit-norm coverage feature
phi. Three phi variants exist: the start state alone (``s``), the shift alone
(``delta``), and their concatenation (``s_plus_delta``, dimension 2D).

All arithmetic runs in float64 regardless of storage precision; hidden
dimensions in the thousands make 32-bit accumulation of norms unsafe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, EmptyMatrix, NegativeUtility, RirsError, ZeroFeature
from .pool_io import AnchorRecord

VARIANTS = ("s", "delta", "s_plus_delta")

# Pre-normalization norms at or below this are treated as degenerate: a zero
# coverage feature would corrupt every farthest-first distance downstream.
ZERO_FEATURE_THRESHOLD = 1e-12


@dataclass
class RirsFeatures:
    """Per-instance shift features: anchors, shift, utility, coverage vector."""

    instance_id: str
    s: np.ndarray
    e: np.ndarray
    delta: np.ndarray
    q: float
    q_tilde: float
    phi: np.ndarray
    variant: str


def average_layers(states: np.ndarray) -> np.ndarray:
    """Component-wise mean over the L rows of an (L, D) matrix."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2 or states.shape[0] < 1 or states.shape[1] < 1:
        raise EmptyMatrix(f"expected a nonempty (L, D) matrix, got shape {states.shape}")
    return states.mean(axis=0)


def delta(s: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Start-to-end shift e - s."""
    s = np.asarray(s, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if s.shape != e.shape:
        raise DimMismatch(f"start has shape {s.shape}, end has shape {e.shape}")
    return e - s


def utility(shift: np.ndarray) -> float:
    """Euclidean norm of the shift vector."""
    return float(np.linalg.norm(np.asarray(shift, dtype=np.float64)))


def utility_transform(q: float) -> float:
    """Monotone compression ln(1 + q) of a nonnegative utility."""
    if q < 0:
        raise NegativeUtility(f"utility must be nonnegative, got {q}")
    return math.log1p(q)


def coverage_feature(s: np.ndarray, shift: np.ndarray, variant: str) -> np.ndarray:
    """Unit-normalized coverage vector for the chosen variant.

    ``s`` -> s/||s||, ``delta`` -> shift/||shift||, ``s_plus_delta`` ->
    [s; shift] normalized jointly. Raises ZeroFeature when the
    pre-normalization norm is at or below 1e-12.
    """
    if variant == "s":
        raw = np.asarray(s, dtype=np.float64)
    elif variant == "delta":
        raw = np.asarray(shift, dtype=np.float64)
    elif variant == "s_plus_delta":
        raw = np.concatenate(
            [np.asarray(s, dtype=np.float64), np.asarray(shift, dtype=np.float64)]
        )
    else:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    norm = float(np.linalg.norm(raw))
    if norm <= ZERO_FEATURE_THRESHOLD:
        raise ZeroFeature(
            f"coverage feature norm {norm:g} is below the degeneracy threshold"
        )
    return raw / norm


def featurize_record(record: AnchorRecord, variant: str) -> RirsFeatures:
    """Compute all shift features for a single validated anchor record."""
    s = average_layers(record.start_states)
    e = average_layers(record.end_states)
    shift = delta(s, e)
    q = utility(shift)
    return RirsFeatures(
        instance_id=record.instance_id,
        s=s,
        e=e,
        delta=shift,
        q=q,
        q_tilde=utility_transform(q),
        phi=coverage_feature(s, shift, variant),
        variant=variant,
    )


def featurize_pool(records: list[AnchorRecord], variant: str) -> list[RirsFeatures]:
    """Featurize every record, preserving pool order.

    Component errors are re-raised with the offending instance_id attached so
    a bad instance in a large dump is identifiable.
    """
    features = []
    for record in records:
        try:
            features.append(featurize_record(record, variant))
        except RirsError as exc:
            raise type(exc)(f"instance {record.instance_id!r}: {exc}") from exc
    return features
