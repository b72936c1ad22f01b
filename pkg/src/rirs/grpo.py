"""Numeric kernels of the group-relative policy objective.

These are the desk-checkable pieces only: binary verifiable reward,
group-standardized advantages, the clipped importance-ratio surrogate, the
mask-normalized KL penalty, and their assembly into a single objective value.
There is no policy, sampler, or optimizer here.

Conventions, chosen once and kept auditable:
  * advantages standardize with the population (divide-by-N) standard
    deviation and add epsilon to the std itself, not the variance;
  * the token mask defaults to all-ones;
  * rewards are real-valued in [0, 1] even though the exact-match verifier
    only ever produces {0, 1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyAnswer,
    InvalidParams,
    NegativeKlTerm,
    NonPositiveRatio,
)


@dataclass
class RewardGroup:
    """N scalar rewards for one prompt's rollout group."""

    rewards: list[float]
    epsilon: float = 1e-6


@dataclass
class TokenBatch:
    """Per-token quantities for one trajectory.

    ``advantages`` is the trajectory's group advantage broadcast per token;
    ``kl_terms`` are precomputed per-state KL divergences to the reference
    policy (see ``kl_divergence`` for building them from explicit
    distributions over a small vocabulary).
    """

    logp_new: list[float]
    logp_old: list[float]
    advantages: list[float]
    mask: list[int] = field(default_factory=list)
    kl_terms: list[float] = field(default_factory=list)

    def length(self) -> int:
        return len(self.logp_new)

    def resolved_mask(self) -> np.ndarray:
        if self.mask:
            return np.asarray(self.mask, dtype=np.float64)
        return np.ones(self.length(), dtype=np.float64)

    def resolved_kl(self) -> np.ndarray:
        if self.kl_terms:
            return np.asarray(self.kl_terms, dtype=np.float64)
        return np.zeros(self.length(), dtype=np.float64)

    def check(self) -> None:
        n = self.length()
        for name in ("logp_old", "advantages"):
            if len(getattr(self, name)) != n:
                raise InvalidParams(f"{name} length differs from logp_new length {n}")
        if self.mask and len(self.mask) != n:
            raise InvalidParams(f"mask length differs from logp_new length {n}")
        if self.kl_terms and len(self.kl_terms) != n:
            raise InvalidParams(f"kl_terms length differs from logp_new length {n}")


@dataclass
class GrpoParams:
    clip_epsilon: float = 0.2
    kl_weight: float = 0.0
    epsilon: float = 1e-6

    def check(self) -> None:
        if not (0 < self.clip_epsilon < 1):
            raise InvalidParams(f"clip_epsilon must be in (0, 1), got {self.clip_epsilon}")
        if self.kl_weight < 0:
            raise InvalidParams(f"kl_weight must be >= 0, got {self.kl_weight}")


def verify_reward(answer: str, gold: str) -> int:
    """1 iff the trimmed, case-insensitive strings match exactly, else 0."""
    a = answer.strip()
    g = gold.strip()
    if not a or not g:
        raise EmptyAnswer("answer and gold must be nonempty after trimming")
    return int(a.lower() == g.lower())


def group_advantages(group: RewardGroup) -> list[float]:
    """Standardized group-relative advantages (r_i - mean) / (std + eps).

    std is the population standard deviation; epsilon keeps the all-equal
    group finite (and exactly zero, since the numerator is exactly zero).
    """
    rewards = np.asarray(group.rewards, dtype=np.float64)
    if rewards.ndim != 1 or len(rewards) < 1:
        raise InvalidParams("reward group must hold at least one reward")
    if not np.isfinite(rewards).all():
        raise InvalidParams("rewards must be finite")
    if (rewards < 0).any() or (rewards > 1).any():
        raise InvalidParams("rewards must lie in [0, 1]")
    std = float(rewards.std())  # population: divide by N
    return ((rewards - rewards.mean()) / (std + group.epsilon)).tolist()


def clipped_surrogate(ratio: float, advantage: float, clip_epsilon: float) -> float:
    """min(ratio * A, clip(ratio, 1 - eps_c, 1 + eps_c) * A)."""
    if ratio <= 0:
        raise NonPositiveRatio(f"importance ratio must be positive, got {ratio}")
    clipped = min(max(ratio, 1.0 - clip_epsilon), 1.0 + clip_epsilon)
    return min(ratio * advantage, clipped * advantage)


def kl_divergence(p: list[float], q: list[float]) -> float:
    """Discrete KL(p || q) = sum p ln(p/q) over an explicit small vocabulary."""
    pa = np.asarray(p, dtype=np.float64)
    qa = np.asarray(q, dtype=np.float64)
    if pa.shape != qa.shape or pa.ndim != 1:
        raise InvalidParams("distributions must be equal-length vectors")
    if (pa < 0).any() or (qa < 0).any():
        raise InvalidParams("probabilities must be nonnegative")
    if abs(pa.sum() - 1.0) > 1e-9 or abs(qa.sum() - 1.0) > 1e-9:
        raise InvalidParams("distributions must sum to 1")
    if ((pa > 0) & (qa == 0)).any():
        raise InvalidParams("KL undefined: p puts mass where q has none")
    support = pa > 0
    return float((pa[support] * np.log(pa[support] / qa[support])).sum())


def kl_penalty(batch: TokenBatch, epsilon: float = 1e-6) -> float:
    """Mask-normalized KL: sum(m * kl) / (sum(m) + eps)."""
    batch.check()
    kl = batch.resolved_kl()
    if (kl < 0).any():
        raise NegativeKlTerm(f"KL terms must be nonnegative, got min {kl.min()}")
    mask = batch.resolved_mask()
    return float((mask * kl).sum() / (mask.sum() + epsilon))


def _batch_surrogate(batch: TokenBatch, clip_epsilon: float) -> float:
    """Sum of per-token clipped surrogates with ratio = exp(new - old)."""
    batch.check()
    total = 0.0
    for lp_new, lp_old, adv in zip(batch.logp_new, batch.logp_old, batch.advantages):
        ratio = math.exp(lp_new - lp_old)
        total += clipped_surrogate(ratio, adv, clip_epsilon)
    return total


def _concat_batches(batches: list[TokenBatch]) -> TokenBatch:
    merged = TokenBatch(logp_new=[], logp_old=[], advantages=[], mask=[], kl_terms=[])
    for b in batches:
        merged.logp_new.extend(b.logp_new)
        merged.logp_old.extend(b.logp_old)
        merged.advantages.extend(b.advantages)
        merged.mask.extend(b.resolved_mask().tolist())
        merged.kl_terms.extend(b.resolved_kl().tolist())
    return merged


def grpo_objective(groups: list[list[TokenBatch]], params: GrpoParams) -> float:
    """Assemble the full objective from per-prompt trajectory groups.

    Per prompt: the mean over its N trajectories of the summed token-level
    clipped surrogates, minus kl_weight times the mask-normalized KL over the
    prompt's pooled tokens. The result is the mean over prompts.
    """
    params.check()
    if not groups or any(not g for g in groups):
        raise InvalidParams("need at least one prompt group with trajectories")
    per_prompt = []
    for batches in groups:
        surrogate = sum(_batch_surrogate(b, params.clip_epsilon) for b in batches) / len(
            batches
        )
        penalty = kl_penalty(_concat_batches(batches), params.epsilon)
        per_prompt.append(surrogate - params.kl_weight * penalty)
    return float(np.mean(per_prompt))


def objective_report(groups: list[list[TokenBatch]], params: GrpoParams) -> dict:
    """Component-wise breakdown used by the ``grpo-check`` CLI subcommand."""
    params.check()
    report = {"prompts": [], "params": {
        "clip_epsilon": params.clip_epsilon,
        "kl_weight": params.kl_weight,
        "epsilon": params.epsilon,
    }}
    for batches in groups:
        surrogate = sum(_batch_surrogate(b, params.clip_epsilon) for b in batches) / len(
            batches
        )
        penalty = kl_penalty(_concat_batches(batches), params.epsilon)
        report["prompts"].append(
            {
                "trajectories": len(batches),
                "mean_surrogate": surrogate,
                "kl_penalty": penalty,
                "value": surrogate - params.kl_weight * penalty,
            }
        )
    report["objective"] = grpo_objective(groups, params)
    return report


def load_fixture(doc: dict) -> tuple[list[list[TokenBatch]], GrpoParams]:
    """Parse the grpo-check JSON fixture.

    Schema: {"params": {clip_epsilon, kl_weight, epsilon},
             "groups": [{"rewards": [...], "epsilon": ...,
                         "trajectories": [{"logp_new": [...], "logp_old": [...],
                                           "mask": [...], "kl_terms": [...]}]}]}
    Advantages are derived from each group's rewards and broadcast per token.
    """
    if not isinstance(doc, dict) or "groups" not in doc:
        raise InvalidParams("fixture must be an object with a 'groups' list")
    raw_params = doc.get("params", {})
    params = GrpoParams(
        clip_epsilon=float(raw_params.get("clip_epsilon", 0.2)),
        kl_weight=float(raw_params.get("kl_weight", 0.0)),
        epsilon=float(raw_params.get("epsilon", 1e-6)),
    )
    groups = []
    for g in doc["groups"]:
        rewards = RewardGroup(
            rewards=[float(r) for r in g["rewards"]],
            epsilon=float(g.get("epsilon", 1e-6)),
        )
        advantages = group_advantages(rewards)
        trajectories = g["trajectories"]
        if len(trajectories) != len(advantages):
            raise InvalidParams(
                f"group has {len(advantages)} rewards but {len(trajectories)} trajectories"
            )
        batches = []
        for adv, t in zip(advantages, trajectories):
            n = len(t["logp_new"])
            batches.append(
                TokenBatch(
                    logp_new=[float(v) for v in t["logp_new"]],
                    logp_old=[float(v) for v in t["logp_old"]],
                    advantages=[adv] * n,
                    mask=[int(v) for v in t.get("mask", [])],
                    kl_terms=[float(v) for v in t.get("kl_terms", [])],
                )
            )
        groups.append(batches)
    return groups, params
