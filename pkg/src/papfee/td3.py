"""Twin-delayed deep deterministic policy gradient on top of :mod:`papfee.neuralnet`."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import neuralnet as nn
from .metrics import summarize

ACTION_DIM = 3
A_MIN, A_MAX = -1.0, 1.0


@dataclass(frozen=True)
class Td3Config:
    gamma: float = 0.99
    tau: float = 0.001
    policy_delay_K: int = 2
    expl_noise_sigma: float = 0.1
    smooth_noise_sigma: float = 0.2
    smooth_clip_c: float = 0.5
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    batch_size: int = 64
    buffer_size: int = 200_000
    warmup_steps: int = 1000
    # gradient updates per environment step once warm-up is over
    updates_per_step: int = 1
    # weight of the mean squared action penalty in the actor loss (0: plain TD3)
    action_l2: float = 0.0
    hidden: tuple = (256, 512, 512)
    # "identity" or "relu" (the latter as in the published architecture table)
    critic_output: str = "identity"
    # "stored": critic loss on replayed actions; "policy": on mu(s) as printed
    critic_action: str = "stored"
    reward_scale: float = 1e-3

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 < self.tau < 1:
            raise ValueError("tau must be in (0, 1)")
        if self.action_l2 < 0:
            raise ValueError("action_l2 must be >= 0")
        if self.updates_per_step < 1:
            raise ValueError("updates_per_step must be >= 1")
        if self.policy_delay_K < 1:
            raise ValueError("policy delay must be >= 1")
        if self.critic_output not in ("identity", "relu"):
            raise ValueError(f"critic_output must be identity or relu, got {self.critic_output}")
        if self.critic_action not in ("stored", "policy"):
            raise ValueError(f"critic_action must be stored or policy, got {self.critic_action}")


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int = ACTION_DIM):
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, state_dim))
        self.actions = np.zeros((self.capacity, action_dim))
        self.rewards = np.zeros(self.capacity)
        self.next_states = np.zeros((self.capacity, state_dim))
        self.dones = np.zeros(self.capacity)
        self.size = 0
        self._next = 0

    def __len__(self) -> int:
        return self.size

    def add(self, state, action, reward, next_state, done) -> None:
        k = self._next
        self.states[k] = state
        self.actions[k] = action
        self.rewards[k] = reward
        self.next_states[k] = next_state
        self.dones[k] = float(done)
        self._next = (k + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} transitions, batch needs {batch_size}")
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = self.sample_indices(batch_size, rng)
        return (
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
            self.dones[idx],
        )


def select_action(actor: nn.Mlp, state, expl_noise_sigma: float, rng: np.random.Generator) -> np.ndarray:
    a = actor(np.asarray(state, dtype=float))
    if expl_noise_sigma > 0:
        a = a + rng.normal(0.0, expl_noise_sigma, size=a.shape)
    return np.clip(a, A_MIN, A_MAX)


def smoothed_target_action(target_actor: nn.Mlp, next_state, cfg: Td3Config, rng: np.random.Generator) -> np.ndarray:
    a = target_actor(np.asarray(next_state, dtype=float))
    noise = rng.normal(0.0, cfg.smooth_noise_sigma, size=a.shape) if cfg.smooth_noise_sigma > 0 else np.zeros_like(a)
    return np.clip(a + np.clip(noise, -cfg.smooth_clip_c, cfg.smooth_clip_c), A_MIN, A_MAX)


def q_values(critic: nn.Mlp, states, actions) -> np.ndarray:
    return critic(np.concatenate([states, actions], axis=-1))[..., 0]


def compute_target(reward, done, next_state, target_critics, target_actor, cfg: Td3Config, rng) -> np.ndarray:
    """Clipped double-Q bootstrap target, vectorized over the batch."""
    reward = np.asarray(reward, dtype=float)
    done = np.asarray(done, dtype=float)
    a_next = smoothed_target_action(target_actor, next_state, cfg, rng)
    q1 = q_values(target_critics[0], next_state, a_next)
    q2 = q_values(target_critics[1], next_state, a_next)
    return reward + cfg.gamma * (1.0 - done) * np.minimum(q1, q2)


def _mse_step(critic: nn.Mlp, opt: nn.Adam, x: np.ndarray, y: np.ndarray) -> float:
    q, cache = nn.forward(critic, x)
    err = q[:, 0] - y
    loss = float(np.mean(err**2))
    grad_out = (2.0 / len(y)) * err[:, None]
    grads, _ = nn.backward(critic, cache, grad_out)
    nn.optimizer_step(critic, grads, opt)
    return loss


def critic_update(batch, critics, optimizers, y, actor: Optional[nn.Mlp] = None, mode: str = "stored"):
    """One optimizer step per critic towards the shared targets ``y``.

    With ``mode="policy"`` the critic is evaluated at mu(s) (requires
    ``actor``) instead of the replayed action.
    """
    states, actions = batch[0], batch[1]
    if mode == "policy":
        actions = actor(states)
    x = np.concatenate([states, actions], axis=1)
    return tuple(_mse_step(c, o, x, y) for c, o in zip(critics, optimizers))


def actor_update(states, actor: nn.Mlp, critic: nn.Mlp, optimizer: nn.Adam, action_l2: float = 0.0) -> float:
    """Ascend mean Q(s, mu(s)) - action_l2 * mean(mu(s)^2); the critic is only read."""
    a, a_cache = nn.forward(actor, states)
    q, q_cache = nn.forward(critic, np.concatenate([states, a], axis=1))
    batch = states.shape[0]
    _, dq_dx = nn.backward(critic, q_cache, np.full_like(q, 1.0 / batch))
    grad_a = -dq_dx[:, -a.shape[1]:]
    if action_l2:
        grad_a = grad_a + (2.0 * action_l2 / a.size) * a
    grads, _ = nn.backward(actor, a_cache, grad_a)
    nn.optimizer_step(actor, grads, optimizer)
    return float(np.mean(q))


@dataclass
class Td3Agent:
    state_dim: int
    cfg: Td3Config = field(default_factory=Td3Config)
    seed: int = 0

    def __post_init__(self) -> None:
        seeds = np.random.SeedSequence(self.seed).spawn(3)
        init_rng = np.random.default_rng(seeds[0])
        self.noise_rng = np.random.default_rng(seeds[1])
        self.sample_rng = np.random.default_rng(seeds[2])
        hidden = list(self.cfg.hidden)
        self.actor = nn.build_mlp([self.state_dim, *hidden, ACTION_DIM], "relu", "tanh", init_rng)
        critic_dims = [self.state_dim + ACTION_DIM, *hidden, 1]
        self.critics = [
            nn.build_mlp(critic_dims, "relu", self.cfg.critic_output, init_rng) for _ in range(2)
        ]
        self.actor_target = self.actor.copy()
        self.critic_targets = [c.copy() for c in self.critics]
        self.actor_opt = nn.Adam(lr=self.cfg.actor_lr)
        self.critic_opts = [nn.Adam(lr=self.cfg.critic_lr) for _ in range(2)]
        self.buffer = ReplayBuffer(self.cfg.buffer_size, self.state_dim)
        self.updates = 0

    def act(self, state, explore: bool = True) -> np.ndarray:
        sigma = self.cfg.expl_noise_sigma if explore else 0.0
        return select_action(self.actor, state, sigma, self.noise_rng)

    def update(self) -> Optional[dict]:
        """One critic step and, every K-th call, an actor step plus target blends."""
        cfg = self.cfg
        if len(self.buffer) < cfg.batch_size:
            return None
        batch = self.buffer.sample(cfg.batch_size, self.sample_rng)
        states, _, rewards, next_states, dones = batch
        y = compute_target(rewards, dones, next_states, self.critic_targets, self.actor_target, cfg, self.sample_rng)
        losses = critic_update(batch, self.critics, self.critic_opts, y, self.actor, cfg.critic_action)
        self.updates += 1
        out = {"critic_loss": losses}
        if self.updates % cfg.policy_delay_K == 0:
            out["actor_q"] = actor_update(states, self.actor, self.critics[0], self.actor_opt, cfg.action_l2)
            nn.soft_update(self.actor_target, self.actor, cfg.tau)
            for tgt, c in zip(self.critic_targets, self.critics):
                nn.soft_update(tgt, c, cfg.tau)
        return out


@dataclass
class EpisodeLog:
    episode: int
    fee: float
    fi: float
    ee: float
    airtime: float
    steps: int
    ret: float


def run_episode(env, policy: Callable[[np.ndarray], np.ndarray]):
    """Roll out a policy without learning; returns the environment's record."""
    state = env.reset()
    while True:
        out = env.step(policy(state))
        if out.done:
            return env.record
        state = out.next_state


def train(
    env_factory: Callable[[int], object],
    cfg: Td3Config,
    episodes: int,
    seed: int = 0,
    agent: Optional[Td3Agent] = None,
    on_episode_end: Optional[Callable[[Td3Agent, EpisodeLog], None]] = None,
):
    """Run the training loop; returns (agent, per-episode logs).

    ``env_factory(episode)`` supplies the environment for each episode, so a
    caller can fix or randomize the ground-node layout.
    """
    if agent is None:
        agent = Td3Agent(env_factory(0).scenario.obs_dim, cfg, seed)
    warm_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(4)[3])
    total_steps = 0
    logs: list[EpisodeLog] = []
    for ep in range(episodes):
        env = env_factory(ep)
        state = env.reset()
        ret = 0.0
        while True:
            warming = total_steps < cfg.warmup_steps
            if warming:
                action = warm_rng.uniform(A_MIN, A_MAX, size=ACTION_DIM)
            else:
                action = agent.act(state)
            out = env.step(action)
            ret += out.reward
            agent.buffer.add(state, action, out.reward * cfg.reward_scale, out.next_state, out.done)
            # learning starts once the uniform-action warm-up has filled the buffer
            if not warming:
                for _ in range(cfg.updates_per_step):
                    agent.update()
            total_steps += 1
            state = out.next_state
            if out.done:
                break
        s = summarize(env.record)
        log = EpisodeLog(ep, s.fee, s.fi, s.ee, s.airtime, s.steps, ret)
        logs.append(log)
        if on_episode_end is not None:
            on_episode_end(agent, log)
    return agent, logs
