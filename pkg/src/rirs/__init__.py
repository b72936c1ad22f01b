"""Training-free, label-free data selection for RLVR.

Given one deterministic reasoning rollout per instance, the pipeline decodes
start/end anchor hidden states, computes the reasoning-induced representation
shift and its utility score, and selects compact diverse subsets via
quality-weighted farthest-first traversal. Baseline selectors, validation
analytics, and the group-relative policy objective kernels live alongside.
"""

from .analysis import PairedSeries, kendall_tau, spearman_rho
from .baselines import ScoreTable, cot_similarity, perplexity, rank_and_take, sc_entropy
from .features import RirsFeatures, featurize_pool
from .grpo import (
    GrpoParams,
    RewardGroup,
    TokenBatch,
    clipped_surrogate,
    group_advantages,
    grpo_objective,
    kl_penalty,
    verify_reward,
)
from .pool_io import (
    AnchorRecord,
    PoolManifest,
    RolloutRecord,
    read_pool,
    read_rollout_records,
    write_pool,
    write_rollout_records,
)
from .select import (
    SelectionConfig,
    SelectionResult,
    farthest_first_select,
    kmeans_center_select,
    qwff_select,
    random_select,
    topk_utility_select,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorRecord",
    "GrpoParams",
    "PairedSeries",
    "PoolManifest",
    "RewardGroup",
    "RirsFeatures",
    "RolloutRecord",
    "ScoreTable",
    "SelectionConfig",
    "SelectionResult",
    "TokenBatch",
    "clipped_surrogate",
    "cot_similarity",
    "farthest_first_select",
    "featurize_pool",
    "group_advantages",
    "grpo_objective",
    "kendall_tau",
    "kl_penalty",
    "kmeans_center_select",
    "perplexity",
    "qwff_select",
    "random_select",
    "rank_and_take",
    "read_pool",
    "read_rollout_records",
    "sc_entropy",
    "spearman_rho",
    "topk_utility_select",
    "verify_reward",
    "write_pool",
    "write_rollout_records",
]
