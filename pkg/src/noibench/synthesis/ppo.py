"""Masked PPO over topology edits: actor-critic MLPs, clipped surrogate
objective, generalized advantage estimation, and hard action masking (masked
logits are driven to zero probability before sampling)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from ..rng import substream_seed
from .env import MdpState, SynthesisEnv, featurize, legal_actions
from .evaluate import SynthesisRun, full_evaluation

MASK_FILL = -1e9


@dataclass
class PpoConfig:
    episodes: int = 500
    episodes_per_update: int = 8
    epochs: int = 4
    minibatch: int = 64
    clip_ratio: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    lr: float = 3e-4
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden: int = 128
    eval_interval: int = 50


class _Mlp(nn.Module):
    def __init__(self, n_in: int, n_out: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(n_in, hidden), nn.Tanh(),
            nn.Linear(hidden, hidden), nn.Tanh(),
            nn.Linear(hidden, n_out),
        )

    def forward(self, x):
        return self.net(x)


def _masked_dist(logits: torch.Tensor, mask: torch.Tensor):
    return torch.distributions.Categorical(
        logits=logits.masked_fill(~mask, MASK_FILL)
    )


def train(env: SynthesisEnv, cfg: PpoConfig | None = None, seed: int = 0,
          trace=None) -> SynthesisRun:
    """Train the masked PPO agent and return its run log.

    Every eval_interval episodes the block's best topology (by training
    reward) goes through the full interference protocol; the returned best
    topology maximizes the fixed-normalization objective over those
    checkpoints. A pre-generated trace pins the evaluation workload.
    """
    cfg = cfg or PpoConfig()
    run = SynthesisRun(method="ppo", seed=seed, config=asdict(cfg))
    if cfg.episodes <= 0:
        run.best_topology = env.initial
        return run

    torch.manual_seed(substream_seed(seed, "policy"))
    torch.set_num_threads(1)
    obs_dim = featurize(env.reset(), env.space).shape[0]
    n_actions = env.space.n_actions
    policy = _Mlp(obs_dim, n_actions, cfg.hidden)
    value = _Mlp(obs_dim, 1, cfg.hidden)
    optim = torch.optim.Adam(
        list(policy.parameters()) + list(value.parameters()), lr=cfg.lr
    )

    max_masked_prob = 0.0
    block_best = None  # (train reward, topology)
    buf_obs, buf_act, buf_logp, buf_rew, buf_val, buf_mask, buf_done = (
        [], [], [], [], [], [], []
    )

    def flush_update():
        nonlocal buf_obs, buf_act, buf_logp, buf_rew, buf_val, buf_mask, buf_done
        obs = torch.as_tensor(np.asarray(buf_obs), dtype=torch.float32)
        acts = torch.as_tensor(buf_act)
        old_logp = torch.as_tensor(buf_logp, dtype=torch.float32)
        masks = torch.as_tensor(np.asarray(buf_mask))
        rews = np.asarray(buf_rew, dtype=np.float64)
        vals = np.asarray(buf_val + [0.0], dtype=np.float64)
        dones = np.asarray(buf_done, dtype=np.float64)

        adv = np.zeros(len(rews))
        last = 0.0
        for i in range(len(rews) - 1, -1, -1):
            nonterm = 1.0 - dones[i]
            delta = rews[i] + cfg.discount * vals[i + 1] * nonterm - vals[i]
            last = delta + cfg.discount * cfg.gae_lambda * nonterm * last
            adv[i] = last
        returns = torch.as_tensor(adv + vals[:-1], dtype=torch.float32)
        advt = torch.as_tensor(adv, dtype=torch.float32)
        advt = (advt - advt.mean()) / (advt.std() + 1e-8)

        first_epoch_vloss = None
        n = len(buf_obs)
        for epoch in range(cfg.epochs):
            perm = torch.randperm(n)
            epoch_vloss = []
            for lo in range(0, n, cfg.minibatch):
                idx = perm[lo : lo + cfg.minibatch]
                dist = _masked_dist(policy(obs[idx]), masks[idx])
                logp = dist.log_prob(acts[idx])
                ratio = torch.exp(logp - old_logp[idx])
                clipped = torch.clamp(
                    ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio
                )
                pg_loss = -torch.min(ratio * advt[idx], clipped * advt[idx]).mean()
                v = value(obs[idx]).squeeze(-1)
                v_loss = ((v - returns[idx]) ** 2).mean()
                loss = (
                    pg_loss
                    + cfg.value_coef * v_loss
                    - cfg.entropy_coef * dist.entropy().mean()
                )
                optim.zero_grad()
                loss.backward()
                nn.utils.clip_grad_norm_(
                    list(policy.parameters()) + list(value.parameters()),
                    cfg.max_grad_norm,
                )
                optim.step()
                epoch_vloss.append(float(v_loss.detach()))
            if epoch == 0:
                first_epoch_vloss = float(np.mean(epoch_vloss))
        run.value_losses.append(first_epoch_vloss)
        buf_obs, buf_act, buf_logp, buf_rew, buf_val, buf_mask, buf_done = (
            [], [], [], [], [], [], []
        )

    for episode in range(cfg.episodes):
        state = env.reset()
        ep_actions, ep_rewards = [], []
        done = False
        while not done:
            obs = featurize(state, env.space)
            mask = legal_actions(state, env.space)
            obs_t = torch.as_tensor(obs, dtype=torch.float32)
            mask_t = torch.as_tensor(mask)
            with torch.no_grad():
                dist = _masked_dist(policy(obs_t), mask_t)
                action = int(dist.sample())
                logp = float(dist.log_prob(torch.as_tensor(action)))
                val = float(value(obs_t).squeeze(-1))
                masked_prob = float(dist.probs[~mask_t].sum())
            max_masked_prob = max(max_masked_prob, masked_prob)
            assert mask[action], "sampled a masked action"
            state, reward, done, _metrics = env.step(state, action)
            buf_obs.append(obs)
            buf_act.append(action)
            buf_logp.append(logp)
            buf_rew.append(reward)
            buf_val.append(val)
            buf_mask.append(mask)
            buf_done.append(1.0 if done else 0.0)
            ep_actions.append(action)
            ep_rewards.append(reward)
            if block_best is None or reward > block_best[0]:
                block_best = (reward, state.topology)
        run.episodes.append({"actions": ep_actions, "rewards": ep_rewards})

        if (episode + 1) % cfg.episodes_per_update == 0:
            flush_update()
        if (episode + 1) % cfg.eval_interval == 0 or episode + 1 == cfg.episodes:
            if block_best is not None:
                result = full_evaluation(
                    block_best[1], env.workload, seed, env.weights, env.fixed,
                    trace=trace,
                )
                run.record_eval(episode + 1, block_best[1], result)
                block_best = None

    if buf_obs:
        flush_update()
    run.config["max_masked_prob"] = max_masked_prob
    run.policy_state = {
        "policy": policy.state_dict(),
        "value": value.state_dict(),
    }
    return run


def replay_rewards(env: SynthesisEnv, actions_per_episode) -> list[list[float]]:
    """Re-run logged actions through a fresh environment; used to audit
    reward determinism of a recorded run."""
    out = []
    for actions in actions_per_episode:
        state = env.reset()
        rewards = []
        for a in actions:
            state, r, _done, _m = env.step(state, a)
            rewards.append(r)
        out.append(rewards)
    return out
