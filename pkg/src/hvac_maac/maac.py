"""
Multi-actor attention-critic learner

Replay buffer, soft actor-critic targets with an entropy term, the joint
critic regression, policy gradients with the multi-agent baseline, Polyak
target tracking, the episodic training loop and greedy execution.
"""

import copy
import logging
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .building import BuildingEnv, EnvState, JointAction, observe, rollout
from .config import Config, ConfigError, parse_bool
from .networks import (
    AttentionCritic, DenseNet, OptimizerState, Params, clip_grad_norm, load_checkpoint, log_softmax,
    one_hot, optimizer_step, save_checkpoint,
)
from .traces import TraceSet

logger = logging.getLogger(__name__)


class MAACError(Exception):
    """Base exception for learning errors."""
    pass


class InsufficientSamplesError(MAACError):
    """Raised when the replay buffer holds fewer transitions than requested."""
    pass


class ExecutionError(MAACError):
    """Raised when an execution horizon does not fit the traces."""
    pass


# =============================================================================
# CONFIGURATION
# =============================================================================

@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; names follow the usual MAAC notation."""
    episodes: int = Config.EPISODES
    slots_per_episode: int = Config.SLOTS_PER_DAY
    batch_size: int = Config.BATCH_SIZE
    buffer_capacity: int = Config.BUFFER_CAPACITY
    update_every: int = Config.UPDATE_EVERY
    actor_lr: float = Config.ACTOR_LR
    critic_lr: float = Config.CRITIC_LR
    gamma: float = Config.GAMMA
    soft_rate: float = Config.SOFT_RATE
    temperature: float = Config.TEMPERATURE
    actor_hidden: Tuple[int, ...] = (Config.ACTOR_HIDDEN, Config.ACTOR_HIDDEN)
    critic_hidden: int = Config.CRITIC_HIDDEN
    attend_dim: int = Config.ATTEND_DIM
    grad_clip: Optional[float] = Config.GRAD_CLIP
    n_envs: int = Config.N_ENVS
    running_window: int = Config.RUNNING_WINDOW
    baseline_from_target: bool = False
    log_every: int = Config.LOG_EVERY_EPISODES

    def __post_init__(self):
        object.__setattr__(self, "actor_hidden", tuple(int(h) for h in self.actor_hidden))
        positive = {
            "episodes": self.episodes, "slots_per_episode": self.slots_per_episode,
            "batch_size": self.batch_size, "buffer_capacity": self.buffer_capacity,
            "update_every": self.update_every, "actor_lr": self.actor_lr, "critic_lr": self.critic_lr,
            "critic_hidden": self.critic_hidden, "attend_dim": self.attend_dim,
            "n_envs": self.n_envs, "running_window": self.running_window,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ConfigError(f"train.{name} must be positive, got {value}")
        if any(h <= 0 for h in self.actor_hidden):
            raise ConfigError("train.actor_hidden sizes must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"train.gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 <= self.soft_rate <= 1.0:
            raise ConfigError(f"train.soft_rate must lie in [0, 1], got {self.soft_rate}")
        if self.temperature < 0:
            raise ConfigError(f"train.temperature must be non-negative, got {self.temperature}")

    @classmethod
    def from_mapping(cls, values: Dict[str, str]) -> "TrainConfig":
        """Build from ``train.*`` keys; ``train.grad_clip = 0`` disables clipping."""
        casts = {
            "episodes": int, "slots_per_episode": int, "batch_size": int, "buffer_capacity": int,
            "update_every": int, "actor_lr": float, "critic_lr": float, "gamma": float,
            "soft_rate": float, "temperature": float, "critic_hidden": int, "attend_dim": int,
            "n_envs": int, "running_window": int, "log_every": int,
        }
        kwargs = {}
        for name, cast in casts.items():
            key = f"train.{name}"
            if key in values:
                try:
                    kwargs[name] = cast(values[key])
                except ValueError as e:
                    raise ConfigError(f"{key} must be a number, got {values[key]!r}") from e
        if "train.actor_hidden" in values:
            kwargs["actor_hidden"] = tuple(int(h) for h in values["train.actor_hidden"].split(",") if h.strip())
        if "train.grad_clip" in values:
            clip = float(values["train.grad_clip"])
            kwargs["grad_clip"] = clip if clip > 0 else None
        if "train.baseline_from_target" in values:
            kwargs["baseline_from_target"] = parse_bool(values["train.baseline_from_target"])
        return cls(**kwargs)


# =============================================================================
# REPLAY
# =============================================================================

@dataclass
class Transition:
    """(o, a, o', r) for all agents."""
    observations: List[np.ndarray]
    actions: List[int]
    next_observations: List[np.ndarray]
    rewards: np.ndarray

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        n = len(self.observations)
        if len(self.actions) != n or len(self.next_observations) != n or self.rewards.shape != (n,):
            raise MAACError(f"transition needs one observation, action and reward per agent ({n})")


@dataclass
class Batch:
    """Stacked transitions: per-agent (B, ...) arrays and (B, n_agents) rewards."""
    observations: List[np.ndarray]
    actions: List[np.ndarray]
    next_observations: List[np.ndarray]
    rewards: np.ndarray

    @property
    def size(self) -> int:
        return self.rewards.shape[0]


class ReplayBuffer:
    """Fixed-capacity ring of transitions; the oldest entry is evicted first."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise MAACError(f"buffer capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._position = 0
        self._size = 0
        self._obs: Optional[List[np.ndarray]] = None
        self._next_obs: Optional[List[np.ndarray]] = None
        self._actions: Optional[np.ndarray] = None
        self._rewards: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self._size

    def _allocate(self, transition: Transition):
        n = len(transition.observations)
        self._obs = [np.zeros((self.capacity, len(o))) for o in transition.observations]
        self._next_obs = [np.zeros((self.capacity, len(o))) for o in transition.observations]
        self._actions = np.zeros((self.capacity, n), dtype=np.int64)
        self._rewards = np.zeros((self.capacity, n))

    def push(self, transition: Transition):
        if self._obs is None:
            self._allocate(transition)
        if len(transition.observations) != len(self._obs):
            raise MAACError("transition agent count differs from earlier transitions")
        k = self._position
        for i in range(len(self._obs)):
            self._obs[i][k] = transition.observations[i]
            self._next_obs[i][k] = transition.next_observations[i]
        self._actions[k] = transition.actions
        self._rewards[k] = transition.rewards
        self._position = (self._position + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def get(self, index: int) -> Transition:
        """Transition ``index`` counted from the oldest one held."""
        if not 0 <= index < self._size:
            raise IndexError(f"buffer index {index} out of range for {self._size} transitions")
        oldest = self._position if self._size == self.capacity else 0
        k = (oldest + index) % self.capacity
        return Transition(
            observations=[o[k].copy() for o in self._obs],
            actions=[int(a) for a in self._actions[k]],
            next_observations=[o[k].copy() for o in self._next_obs],
            rewards=self._rewards[k].copy(),
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform sample with replacement."""
        if batch_size <= 0:
            raise MAACError(f"batch size must be positive, got {batch_size}")
        if self._size < batch_size:
            raise InsufficientSamplesError(
                f"buffer holds {self._size} transitions, {batch_size} requested")
        rows = rng.integers(0, self._size, size=batch_size)
        return Batch(
            observations=[o[rows] for o in self._obs],
            actions=[self._actions[rows, i] for i in range(self._actions.shape[1])],
            next_observations=[o[rows] for o in self._next_obs],
            rewards=self._rewards[rows],
        )


# =============================================================================
# AGENTS
# =============================================================================

def sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per row of a (B, K) probability table."""
    probs = np.atleast_2d(probs)
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    return np.minimum((u[:, None] > cdf).sum(axis=1), probs.shape[1] - 1)


class AgentSet:
    """Actors, the attention critic, their target copies and optimizer states."""

    def __init__(self, obs_sizes: Sequence[int], action_sizes: Sequence[int], config: TrainConfig,
                 rng: np.random.Generator, obs_scales: Optional[Sequence[np.ndarray]] = None):
        if len(obs_sizes) != len(action_sizes):
            raise MAACError("need one action size per observation size")
        self.obs_sizes = list(obs_sizes)
        self.action_sizes = list(action_sizes)
        self.config = config
        self.obs_scales = ([np.ones(n) for n in obs_sizes] if obs_scales is None
                           else [np.asarray(s, dtype=np.float64) for s in obs_scales])

        self.actors = [
            DenseNet([o, *config.actor_hidden, a], "softmax", rng, name=f"actor_{i}")
            for i, (o, a) in enumerate(zip(obs_sizes, action_sizes))
        ]
        self.critic = AttentionCritic(obs_sizes, action_sizes, config.critic_hidden, config.attend_dim, rng)
        self.target_actors = [copy.deepcopy(actor) for actor in self.actors]
        self.target_critic = copy.deepcopy(self.critic)

        self.actor_opts = [OptimizerState.for_params(actor.params, config.actor_lr) for actor in self.actors]
        self.critic_opt = OptimizerState.for_params(self.critic.params, config.critic_lr)

    @property
    def n_agents(self) -> int:
        return len(self.actors)

    def normalize(self, observations: Sequence[np.ndarray]) -> List[np.ndarray]:
        return [np.atleast_2d(o) / s for o, s in zip(observations, self.obs_scales)]

    def policy(self, agent: int, observations: np.ndarray, target: bool = False) -> np.ndarray:
        """Action probabilities for already normalized observations."""
        actor = self.target_actors[agent] if target else self.actors[agent]
        probs, _ = actor.forward(observations)
        return probs

    def act(self, observations: Sequence[np.ndarray], rng: Optional[np.random.Generator] = None,
            greedy: bool = False) -> List[int]:
        """One action index per agent for a single joint observation."""
        normalized = self.normalize(observations)
        actions = []
        for i in range(self.n_agents):
            probs = self.policy(i, normalized[i])
            if greedy:
                actions.append(int(np.argmax(probs[0])))
            else:
                actions.append(int(sample_categorical(probs, rng)[0]))
        return actions

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        tensors = OrderedDict()
        for prefix, actors, critic in (("live", self.actors, self.critic),
                                       ("target", self.target_actors, self.target_critic)):
            for actor in actors:
                for name, value in actor.params.items():
                    tensors[f"{prefix}.{name}"] = value
            for name, value in critic.params.items():
                tensors[f"{prefix}.{name}"] = value
        for i, scale in enumerate(self.obs_scales):
            tensors[f"obs_scale_{i}"] = scale
        return tensors

    def load_state_dict(self, tensors: Dict[str, np.ndarray]):
        expected = self.state_dict()
        missing = [name for name in expected if name not in tensors]
        if missing:
            raise MAACError(f"checkpoint is missing {len(missing)} tensors, e.g. {missing[0]}")
        for name, current in expected.items():
            if tensors[name].shape != current.shape:
                raise MAACError(f"{name}: checkpoint shape {tensors[name].shape} != {current.shape}")
            current[...] = tensors[name]

    def save(self, path: str) -> str:
        return save_checkpoint(path, self.state_dict())

    @classmethod
    def load(cls, path: str, obs_sizes: Sequence[int], action_sizes: Sequence[int],
             config: TrainConfig) -> "AgentSet":
        agents = cls(obs_sizes, action_sizes, config, np.random.default_rng(0))
        agents.load_state_dict(load_checkpoint(path))
        return agents


# =============================================================================
# UPDATES
# =============================================================================

def critic_targets(batch: Batch, agents: AgentSet, rng: np.random.Generator) -> np.ndarray:
    """
    Soft targets y_i = r_i + gamma * (Qbar_i(o', a') - phi * log pibar_i(a'_i | o'_i))
    with one joint sample a' from the target actors. Returns (n_agents, B).
    """
    next_obs = agents.normalize(batch.next_observations)
    next_actions, next_log_probs = [], []
    for j in range(agents.n_agents):
        logits = agents.target_actors[j].logits(next_obs[j])
        log_probs = log_softmax(logits)
        sampled = sample_categorical(np.exp(log_probs), rng)
        next_actions.append(sampled)
        next_log_probs.append(log_probs[np.arange(batch.size), sampled])

    q_next, _ = agents.target_critic.forward(next_obs, next_actions)
    rows = np.arange(batch.size)
    targets = np.zeros((agents.n_agents, batch.size))
    for i in range(agents.n_agents):
        bootstrap = q_next[i][rows, next_actions[i]] - agents.config.temperature * next_log_probs[i]
        targets[i] = batch.rewards[:, i] + agents.config.gamma * bootstrap
    return targets


def joint_critic_loss(critic: AttentionCritic, observations: Sequence[np.ndarray],
                      actions: Sequence[np.ndarray], targets: np.ndarray) -> Tuple[float, Params]:
    """Sum over agents of the mean squared error between Q_i(o, a) and y_i, with its gradient."""
    q_values, cache = critic.forward(observations, actions)
    batch = len(actions[0])
    rows = np.arange(batch)
    loss = 0.0
    d_q = []
    for i, q in enumerate(q_values):
        error = q[rows, actions[i]] - targets[i]
        loss += float(np.mean(error ** 2))
        d = np.zeros_like(q)
        d[rows, actions[i]] = 2.0 * error / batch
        d_q.append(d)
    return loss, critic.backward(d_q, cache)


def critic_update(batch: Batch, agents: AgentSet, rng: np.random.Generator) -> float:
    """One Adam step on the joint critic loss; returns the pre-step loss."""
    targets = critic_targets(batch, agents, rng)
    loss, grads = joint_critic_loss(agents.critic, agents.normalize(batch.observations), batch.actions, targets)
    if agents.config.grad_clip is not None:
        clip_grad_norm(grads, agents.config.grad_clip * agents.n_agents)
    optimizer_step(agents.critic.params, grads, agents.critic_opt)
    return loss


def multiagent_baseline(q_values: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Expected Q over the agent's own actions under ``probs``, the others' actions held fixed."""
    return np.sum(np.atleast_2d(probs) * np.atleast_2d(q_values), axis=1)


def policy_loss(actor: DenseNet, observations: np.ndarray, actions: np.ndarray,
                rho: np.ndarray) -> Tuple[float, Params]:
    """Surrogate -mean(rho * log pi(a | o)) with rho held constant, and its gradient."""
    probs, caches = actor.forward(observations)
    log_probs = log_softmax(caches[-1][1])
    rows = np.arange(len(actions))
    loss = -float(np.mean(rho * log_probs[rows, actions]))
    d_logits = rho[:, None] * (probs - one_hot(actions, probs.shape[1])) / len(actions)
    _, grads = actor.backward(d_logits, caches, from_logits=True)
    return loss, grads


def policy_update(batch: Batch, agents: AgentSet, rng: np.random.Generator) -> List[float]:
    """
    One step per actor along the advantage-weighted score function.

    Fresh actions are drawn from the live actors; the coefficient is
    -phi * log pi_i(a_i) + Q_i(o, a) - b_i(o, a_-i). Returns per-agent gradient norms.
    """
    observations = agents.normalize(batch.observations)
    rows = np.arange(batch.size)
    probs, log_probs, actions = [], [], []
    for i in range(agents.n_agents):
        logits = agents.actors[i].logits(observations[i])
        lp = log_softmax(logits)
        p = np.exp(lp)
        a = sample_categorical(p, rng)
        probs.append(p)
        log_probs.append(lp)
        actions.append(a)

    q_values, _ = agents.critic.forward(observations, actions)
    norms = []
    for i in range(agents.n_agents):
        baseline_probs = (agents.policy(i, observations[i], target=True)
                          if agents.config.baseline_from_target else probs[i])
        baseline = multiagent_baseline(q_values[i], baseline_probs)
        rho = (-agents.config.temperature * log_probs[i][rows, actions[i]]
               + q_values[i][rows, actions[i]] - baseline)
        _, grads = policy_loss(agents.actors[i], observations[i], actions[i], rho)
        norms.append(clip_grad_norm(grads, agents.config.grad_clip))
        optimizer_step(agents.actors[i].params, grads, agents.actor_opts[i])
    return norms


def _polyak(live: Params, target: Params, rate: float):
    for name, value in live.items():
        target[name][...] = rate * value + (1.0 - rate) * target[name]


def soft_update(agents: AgentSet, rate: Optional[float] = None):
    """Move every target parameter toward its live counterpart by ``rate``."""
    rate = agents.config.soft_rate if rate is None else rate
    for actor, target in zip(agents.actors, agents.target_actors):
        _polyak(actor.params, target.params, rate)
    _polyak(agents.critic.params, agents.target_critic.params, rate)


# =============================================================================
# TRAINING & EXECUTION
# =============================================================================

EnvFactory = Callable[[Optional[TraceSet], int], BuildingEnv]


@dataclass
class TrainingResult:
    agents: AgentSet
    log: pd.DataFrame
    updates: int = 0
    critic_losses: List[float] = field(default_factory=list)


def _env_seed(sequence: np.random.SeedSequence) -> int:
    return int(sequence.generate_state(1)[0])


def train(env_factory: EnvFactory, traces: Optional[TraceSet], config: TrainConfig, seed: int,
          show_progress: bool = False) -> TrainingResult:
    """
    Run ``config.episodes`` episodes of ``config.slots_per_episode`` slots.

    Every slot each worker's actors sample actions, the environments step
    (in a thread pool when ``n_envs > 1``) and transitions are stored in
    worker order; every ``update_every`` slots, once the buffer holds a batch,
    one critic update, one policy update and one soft update follow. The
    result is a pure function of (config, traces, seed) with one worker.
    """
    init_seq, act_seq, learn_seq, *env_seqs = np.random.SeedSequence(seed).spawn(3 + config.n_envs)
    envs = [env_factory(traces, _env_seed(s)) for s in env_seqs]
    template = envs[0]
    act_rng = np.random.default_rng(act_seq)
    learn_rng = np.random.default_rng(learn_seq)

    agents = AgentSet(template.observation_sizes, template.action_sizes, config,
                      np.random.default_rng(init_seq), obs_scales=template.observation_scales())
    buffer = ReplayBuffer(config.buffer_capacity)
    n_agents = agents.n_agents
    result = TrainingResult(agents=agents, log=pd.DataFrame(columns=Config.TRAINING_LOG_COLUMNS))

    rows = []
    history = np.zeros((0, n_agents))
    step_count = 0
    executor = ThreadPoolExecutor(max_workers=config.n_envs) if config.n_envs > 1 else None
    try:
        for episode_index in range(config.episodes):
            observations = [env.reset(int(act_rng.integers(env.n_days))) for env in envs]
            reward_sum = np.zeros(n_agents)
            for _ in range(config.slots_per_episode):
                actions = [agents.act(obs, act_rng) for obs in observations]
                if executor is None:
                    outcomes = [envs[0].step(actions[0])]
                else:
                    futures = [executor.submit(env.step, a) for env, a in zip(envs, actions)]
                    outcomes = [f.result() for f in futures]

                finished = False
                for w, (next_obs, rewards, done, _) in enumerate(outcomes):
                    buffer.push(Transition(observations[w], actions[w], next_obs, rewards))
                    reward_sum += rewards / len(envs)
                    observations[w] = next_obs
                    finished = finished or done

                step_count += 1
                if step_count % config.update_every == 0 and len(buffer) >= config.batch_size:
                    result.critic_losses.append(
                        critic_update(buffer.sample(config.batch_size, learn_rng), agents, learn_rng))
                    policy_update(buffer.sample(config.batch_size, learn_rng), agents, learn_rng)
                    soft_update(agents)
                    result.updates += 1
                if finished:
                    break

            history = np.vstack([history, reward_sum])
            running = history[-config.running_window:].mean(axis=0)
            for i in range(n_agents):
                rows.append({"episode": episode_index, "agent": i,
                             "reward_sum": reward_sum[i], "running_mean_200": running[i]})

            if (episode_index + 1) % config.log_every == 0 or episode_index == config.episodes - 1:
                logger.info(f"Episode {episode_index + 1}/{config.episodes}: "
                            f"mean reward {reward_sum.mean():.3f}, running {running.mean():.3f}, "
                            f"updates {result.updates}")
                if show_progress:
                    print(f"   {Config.get_emoji('robot')} Episode {episode_index + 1}/{config.episodes} "
                          f"reward {reward_sum.sum():.2f} (running {running.sum():.2f})")
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    result.log = pd.DataFrame(rows, columns=Config.TRAINING_LOG_COLUMNS)
    return result


class PolicyController:
    """Adapts an AgentSet to the building controller interface."""

    def __init__(self, agents: AgentSet, env: BuildingEnv, greedy: bool = True,
                 rng: Optional[np.random.Generator] = None):
        self.agents = agents
        self.building = env.building
        self.greedy = greedy
        self.rng = rng or np.random.default_rng(0)

    def __call__(self, state: EnvState, traces: TraceSet) -> JointAction:
        observations = observe(self.building, state, traces)
        return JointAction.from_indices(self.agents.act(observations, self.rng, greedy=self.greedy))


def execute(agents: AgentSet, env: BuildingEnv, horizon: int, start_day: int = 0,
            greedy: bool = True, rng: Optional[np.random.Generator] = None) -> pd.DataFrame:
    """
    Run the learned policies for ``horizon`` slots from the start of ``start_day``
    without learning; actions are the argmax of each policy unless ``greedy`` is off.
    """
    traces = env.traces
    start = start_day * traces.slots_per_day
    if horizon < 0 or start + horizon > traces.length:
        raise ExecutionError(
            f"horizon {horizon} from slot {start} exceeds traces of length {traces.length}")
    controller = PolicyController(agents, env, greedy=greedy, rng=rng)
    return rollout(env.building, traces, controller, start_day=start_day, horizon=horizon, rng=env.rng)
