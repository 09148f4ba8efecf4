"""Deep Q-learning on a plain numpy multilayer perceptron."""

from __future__ import annotations

import copy
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import EnvConfig, GarageEnv, observation_size
from .garageset import GarageEntry
from .grid import EncodingMatrix

log = logging.getLogger(__name__)

N_ACTIONS = 4
CHECKPOINT_MAGIC = b"GFQN1"


class DimensionMismatch(ValueError):
    pass


class EmptyBuffer(RuntimeError):
    pass


class QNetwork:
    """Fully connected ReLU network mapping observation vectors to action values."""

    def __init__(self, sizes: list[int], rng: np.random.Generator | None = None):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = list(sizes)
        rng = rng or np.random.default_rng(0)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / n_in)  # He-uniform
            self.weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
            self.biases.append(np.zeros(n_out))

    @classmethod
    def for_observation(cls, k: int, hidden: list[int], rng=None) -> "QNetwork":
        return cls([observation_size(k), *hidden, N_ACTIONS], rng)

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "QNetwork":
        return copy.deepcopy(self)

    def _forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.sizes[0]:
            raise DimensionMismatch(f"input has {x.shape[-1]} features, expected {self.sizes[0]}")
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return h, acts

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self._forward(x)[0]

    __call__ = forward

    def gradients(self, x: np.ndarray, grad_out: np.ndarray) -> list[np.ndarray]:
        """Backpropagate ``grad_out`` (dL/d output) to parameter gradients.

        Returned in ``params`` order: [dW0, db0, dW1, db1, ...].
        """
        _, acts = self._forward(np.atleast_2d(x))
        delta = np.atleast_2d(grad_out)
        grads: list[np.ndarray] = []
        for i in range(len(self.weights) - 1, -1, -1):
            grads.append(delta.sum(axis=0))
            grads.append(acts[i].T @ delta)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        return grads[::-1]

    def all_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params)

    # -- checkpoint ----------------------------------------------------

    def to_bytes(self) -> bytes:
        head = CHECKPOINT_MAGIC + struct.pack("<I", len(self.sizes))
        head += struct.pack(f"<{len(self.sizes)}I", *self.sizes)
        body = b"".join(p.astype("<f8").tobytes() for p in self.params)
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "QNetwork":
        if data[:5] != CHECKPOINT_MAGIC:
            raise ValueError("not a Q-network checkpoint")
        (n,) = struct.unpack_from("<I", data, 5)
        sizes = list(struct.unpack_from(f"<{n}I", data, 9))
        net = cls(sizes)
        offset = 9 + 4 * n
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            w = np.frombuffer(data, "<f8", n_in * n_out, offset).reshape(n_in, n_out)
            offset += 8 * n_in * n_out
            b = np.frombuffer(data, "<f8", n_out, offset)
            offset += 8 * n_out
            net.weights[i] = w.astype(np.float64)
            net.biases[i] = b.astype(np.float64)
        if offset != len(data):
            raise ValueError("checkpoint has trailing bytes")
        return net

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "QNetwork":
        return cls.from_bytes(Path(path).read_bytes())


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._next = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action, reward, next_obs, done) -> None:
        i = self._next
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = done
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise EmptyBuffer("cannot sample from an empty replay buffer")
        return rng.integers(0, self.size, size=n)

    def sample(self, n: int, rng: np.random.Generator) -> "Batch":
        idx = self.sample_indices(n, rng)
        return Batch(
            self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx]
        )


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class TrainConfig:
    gamma: float = 0.99
    learning_rate: float = 1e-4
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.1
    batch_size: int = 32
    target_sync: int = 10_000
    total_timesteps: int = 100_000
    buffer_capacity: int = 100_000
    warmup: int = 1_000
    train_freq: int = 1
    hidden: list[int] = field(default_factory=lambda: [128, 128])
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if self.batch_size < 1 or self.target_sync < 1 or self.train_freq < 1:
            raise ValueError("batch_size, target_sync and train_freq must be >= 1")
        if self.total_timesteps < 0 or self.buffer_capacity < 1 or self.warmup < 0:
            raise ValueError("invalid step counts")

    def epsilon(self, step: int) -> float:
        horizon = self.eps_decay_fraction * self.total_timesteps
        if horizon <= 0:
            return self.eps_end
        frac = step / horizon
        if frac >= 1.0:
            return self.eps_end
        return self.eps_start + frac * (self.eps_end - self.eps_start)


@dataclass
class EpisodeStats:
    episode_return: float
    length: int
    usable: bool


@dataclass
class TrainingLog:
    episodes: list[EpisodeStats] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["episode,return,length,usable"]
        for i, ep in enumerate(self.episodes):
            lines.append(f"{i},{ep.episode_return!r},{ep.length},{int(ep.usable)}")
        return "\n".join(lines) + "\n"

    @property
    def returns(self) -> np.ndarray:
        return np.array([ep.episode_return for ep in self.episodes])


def td_target(r, next_q, done, gamma: float):
    """Bootstrapped target ``r + gamma * max_a q(s', a)`` (just ``r`` when terminal)."""
    next_q = np.asarray(next_q, dtype=np.float64)
    best = next_q.max(axis=-1)
    return np.where(done, r, r + gamma * best)


def batch_loss_and_grads(
    net: QNetwork, target_net: QNetwork, batch: Batch, gamma: float
) -> tuple[float, list[np.ndarray]]:
    targets = td_target(batch.rewards, target_net.forward(batch.next_obs), batch.dones, gamma)
    q = net.forward(batch.obs)
    rows = np.arange(len(batch))
    err = q[rows, batch.actions] - targets
    loss = float(np.mean(err**2))
    grad_out = np.zeros_like(q)
    grad_out[rows, batch.actions] = 2.0 * err / len(batch)
    return loss, net.gradients(batch.obs, grad_out)


def train_step(net: QNetwork, target_net: QNetwork, batch: Batch, cfg: TrainConfig) -> float:
    """One SGD step on the squared TD error; returns the loss before the update."""
    if len(batch) == 0:
        raise EmptyBuffer("empty batch")
    loss, grads = batch_loss_and_grads(net, target_net, batch, cfg.gamma)
    for p, g in zip(net.params, grads):
        p -= cfg.learning_rate * g
    return loss


def select_action(net: QNetwork, obs: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    if rng.random() < eps:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(net.forward(obs)))


def greedy_rollout(net: QNetwork, env: GarageEnv, seed: int = 0):
    """Run one greedy episode; returns (total reward, outcome of the last step, final garage)."""
    obs = env.encode(env.reset(seed))
    total = 0.0
    out = None
    while not env.done:
        out = env.step(int(np.argmax(net.forward(obs))))
        total += out.reward
        obs = env.encode(out.observation)
    return total, out, env.garage()


@dataclass
class TrainResult:
    net: QNetwork
    log: TrainingLog
    garages: list[GarageEntry]


def train(initial: EncodingMatrix, env_cfg: EnvConfig, cfg: TrainConfig) -> TrainResult:
    """Train a Q-network by coloring ``initial`` for ``cfg.total_timesteps`` steps.

    Every episode's final matrix lands in the returned garage list, tagged with
    whether the car reached the exit.
    """
    rng = np.random.default_rng(cfg.seed)
    env = GarageEnv(initial, env_cfg)
    net = QNetwork.for_observation(env_cfg.visibility_k, cfg.hidden, rng)
    target = net.copy()
    buffer = ReplayBuffer(cfg.buffer_capacity, net.sizes[0])
    tlog = TrainingLog()
    garages: list[GarageEntry] = []

    step = 0
    episode = 0
    while step < cfg.total_timesteps:
        ep_seed = int(rng.integers(2**31))
        obs = env.encode(env.reset(ep_seed))
        ep_return = 0.0
        ep_len = 0
        while not env.done and step < cfg.total_timesteps:
            action = select_action(net, obs, cfg.epsilon(step), rng)
            out = env.step(action)
            next_obs = env.encode(out.observation)
            # only true terminations cut the bootstrap; the step budget is a time limit
            terminal = out.reached_exit or env.error_index > env_cfg.max_error
            buffer.add(obs, action, out.reward, next_obs, terminal)
            obs = next_obs
            ep_return += out.reward
            ep_len += 1
            step += 1
            if step > cfg.warmup and step % cfg.train_freq == 0:
                tlog.losses.append(train_step(net, target, buffer.sample(cfg.batch_size, rng), cfg))
            if step % cfg.target_sync == 0:
                target = net.copy()
        tlog.episodes.append(EpisodeStats(ep_return, ep_len, env.connected))
        garages.append(GarageEntry(episode, env.connected, ep_seed, env.garage()))
        episode += 1
    if not net.all_finite():
        log.warning("non-finite Q-network parameters after training")
    return TrainResult(net, tlog, garages)
