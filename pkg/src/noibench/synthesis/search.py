"""Uniform random search baseline over the same edit MDP and evaluation
cadence as the PPO learner (equal evaluation budget by construction)."""

from __future__ import annotations

import numpy as np

from ..rng import generator
from .env import SynthesisEnv, legal_actions
from .evaluate import SynthesisRun, full_evaluation


def random_search(env: SynthesisEnv, episodes: int, seed: int = 0,
                  eval_interval: int = 50, trace=None) -> SynthesisRun:
    """Random legal edit sequences from the initial topology, keeping the best
    full-protocol score among per-block best candidates."""
    run = SynthesisRun(
        method="random",
        seed=seed,
        config={"episodes": episodes, "eval_interval": eval_interval},
    )
    if episodes <= 0:
        run.best_topology = env.initial
        return run
    rng = generator(seed, "search")
    block_best = None
    for episode in range(episodes):
        state = env.reset()
        ep_actions, ep_rewards = [], []
        done = False
        while not done:
            mask = legal_actions(state, env.space)
            legal_ids = np.flatnonzero(mask)
            action = int(legal_ids[rng.integers(len(legal_ids))])
            state, reward, done, _metrics = env.step(state, action)
            ep_actions.append(action)
            ep_rewards.append(reward)
            if block_best is None or reward > block_best[0]:
                block_best = (reward, state.topology)
        run.episodes.append({"actions": ep_actions, "rewards": ep_rewards})
        if (episode + 1) % eval_interval == 0 or episode + 1 == episodes:
            if block_best is not None:
                result = full_evaluation(
                    block_best[1], env.workload, seed, env.weights, env.fixed,
                    trace=trace,
                )
                run.record_eval(episode + 1, block_best[1], result)
                block_best = None
    return run
