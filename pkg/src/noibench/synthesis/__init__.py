"""Topology synthesis: masked-PPO learner and search baselines over the
link-edit MDP with a tail-aware multi-objective reward."""

from .env import (
    ActionSpace,
    MdpState,
    SynthesisEnv,
    featurize,
    legal_actions,
    proxy_bundle,
)
from .evaluate import SynthesisRun, full_evaluation
from .normalize import RewardWeights, RunningNormalizer, reward_fn
from .ppo import PpoConfig, replay_rewards, train
from .search import random_search

__all__ = [
    "ActionSpace",
    "MdpState",
    "SynthesisEnv",
    "featurize",
    "legal_actions",
    "proxy_bundle",
    "SynthesisRun",
    "full_evaluation",
    "RewardWeights",
    "RunningNormalizer",
    "reward_fn",
    "PpoConfig",
    "train",
    "replay_rewards",
    "random_search",
]
