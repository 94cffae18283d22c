"""Actor-critic training and inference for the offloading scheduler.

Training is on-policy: each episode rolls out a fixed number of task
arrivals from an empty system, rewards are credited from the measured
delays once the system drains, and one batched update is applied to the
actor and then the critic. A uniform-sampling replay mode exists behind a
config flag for fidelity experiments only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .mdp import Action, ActionSpace, MdpState, NormalizationConfig, Transition, encode, reward
from .model import DelayParams, ServerConfig, comm_wait, e2e_delay, exec_time, transmission_time
from .neural import (
    AdamOptimizer,
    Mlp,
    apply,
    backward_policy,
    backward_value,
    forward_actor,
    forward_critic,
)
from .sim import Simulator, TaskRecord, WorkloadConfig, generate_arrivals


@dataclass(slots=True)
class AgentConfig:
    gamma: float = 0.99
    beta_actor: float = 1e-4
    beta_critic: float = 2e-4
    epsilon: float = 0.1
    episode_len: int = 64
    episodes: int = 1000
    seed: int = 0
    hidden: int = 128
    optimizer: str = "sgd"  # "sgd" (plain descent) or "adam"
    grad_clip_norm: float = 1.0
    reward_scale: float = 100.0
    reward_mode: str = "measured"  # "measured" (ground truth) or "estimate" (analytic)
    replay: str = "episode"  # "episode" (on-policy) or "uniform"
    replay_capacity: int = 4096
    replay_batch: int = 0  # uniform-mode sample count per update; 0 = episode size
    select: str = "final"  # "final" (last params) or "best_reward" (best moving avg)
    select_window: int = 50
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.beta_actor <= 0 or self.beta_critic <= 0:
            raise ValueError("learning rates must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.reward_mode not in ("measured", "estimate"):
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")
        if self.replay not in ("episode", "uniform"):
            raise ValueError(f"unknown replay mode {self.replay!r}")
        if self.select not in ("final", "best_reward"):
            raise ValueError(f"unknown selection mode {self.select!r}")
        if self.select_window < 1:
            raise ValueError("select_window must be at least 1")


class OffloadEnv:
    """Bundles the simulator with the action space and feature scales."""

    def __init__(
        self,
        servers: list[ServerConfig],
        params: DelayParams,
        blocks_cycles_per_s: list[float],
        workload: WorkloadConfig,
        norms: NormalizationConfig | None = None,
    ):
        self.servers = list(servers)
        self.params = params
        self.blocks = sorted(float(b) for b in blocks_cycles_per_s)
        self.workload = workload
        self.sim = Simulator(servers, params, blocks_cycles_per_s)
        self.action_space = ActionSpace(len(servers), blocks_cycles_per_s)
        self.norms = norms or NormalizationConfig(
            weight_scale=max(workload.weight_set),
            size_scale=workload.size_mean_bits,
            cycles_scale=max(s.capacity_cycles_per_s for s in servers),
        )

    @property
    def state_dim(self) -> int:
        return 2 + 3 * len(self.servers)

    def rollout(self, policy, tasks) -> list[TaskRecord]:
        self.sim.reset()
        return self.sim.run(policy, tasks)


def select_action(
    actor: Mlp,
    state: MdpState,
    epsilon: float,
    rng: np.random.Generator,
    action_space: ActionSpace,
    norms: NormalizationConfig,
) -> Action:
    """Epsilon-greedy draw: uniform with probability epsilon, else a sample
    from the actor's softmax distribution."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return action_space.action(int(rng.integers(action_space.n_actions)))
    probs = forward_actor(actor, encode(state, norms))
    index = int(np.searchsorted(np.cumsum(probs), rng.random()))
    return action_space.action(min(index, action_space.n_actions - 1))


class ActorPolicy:
    """Policy view of an actor network, usable directly by the simulator."""

    def __init__(
        self,
        actor: Mlp,
        action_space: ActionSpace,
        norms: NormalizationConfig,
        epsilon: float,
        rng: np.random.Generator,
    ):
        self.actor = actor
        self.action_space = action_space
        self.norms = norms
        self.epsilon = epsilon
        self.rng = rng

    def decide(self, state: MdpState) -> Action:
        return select_action(
            self.actor, state, self.epsilon, self.rng, self.action_space, self.norms
        )


class _EstimatingActorPolicy(ActorPolicy):
    """Actor policy that also records the decision-time analytic reward.

    The estimate applies the closed-form delay equations to the chosen
    server's queue snapshot at the arrival instant: it is a deterministic
    function of (state, action), which removes the credit noise that the
    measured delays carry from later queue interactions.
    """

    def __init__(self, env: "OffloadEnv", *args):
        super().__init__(*args)
        self.env = env
        self.estimates: list[tuple[float, float]] = []  # (t_net, t_comp) per decision

    def decide(self, state: MdpState) -> Action:
        action = super().decide(state)
        env = self.env
        server = env.servers[action.server]
        snap = env.sim.snapshot(action.server)
        t_net = (
            transmission_time(state.size_bits, server.link_bps)
            + e2e_delay(server.distance_km, env.params)
            + comm_wait(snap.comm_backlog_bits, server.link_bps)
        )
        mu = env.params.mu_cycles_per_bit
        t_comp = exec_time(state.size_bits, mu, action.alloc_cycles_per_s)
        for size_bits, alloc in snap.comp_backlog:
            t_comp += exec_time(size_bits, mu, alloc)
        self.estimates.append((t_net, t_comp))
        return action


def advantage(r: float, v_next: float, v_cur: float, gamma: float, terminal: bool) -> float:
    """One-step advantage r + gamma * V(s') - V(s); V(s') is 0 when terminal."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    if terminal:
        v_next = 0.0
    return r + gamma * v_next - v_cur


@dataclass(slots=True)
class EpisodeStats:
    episode: int
    total_reward: float
    mean_reward: float
    mean_weighted_response_s: float
    wallclock_s: float


@dataclass(slots=True)
class EvalStats:
    """Greedy-rollout summary; weighted figures are in reward-scale units."""

    records: list[TaskRecord]
    mean_weighted_response_s: float
    mean_response_s: float
    per_weight: dict[float, dict[str, float]]


@dataclass(slots=True)
class TrainResult:
    actor: Mlp
    critic: Mlp
    stats: list[EpisodeStats]


def transitions_from_records(
    records: list[TaskRecord],
    action_space: ActionSpace,
    reward_scale: float,
    delays: list[tuple[float, float]] | None = None,
) -> list[Transition]:
    """Chain per-task records into (s, a, r, s') transitions.

    The next state of task i is the observation at task i+1's arrival; the
    final task of an episode has no successor and is marked terminal.
    Rewards come from the measured delays unless `delays` supplies
    per-decision (t_net, t_comp) overrides (the analytic-estimate mode).
    """
    out: list[Transition] = []
    for i, rec in enumerate(records):
        nxt = records[i + 1].state if i + 1 < len(records) else None
        t_net, t_comp = delays[i] if delays is not None else (rec.t_net, rec.t_comp)
        out.append(
            Transition(
                state=rec.state,
                action_index=action_space.index_of(rec.action),
                reward=reward(rec.weight, t_net, t_comp, reward_scale),
                next_state=nxt,
            )
        )
    return out


class Trainer:
    """Owns the networks, RNG streams and rollout buffer for one training run."""

    def __init__(self, env: OffloadEnv, cfg: AgentConfig):
        self.env = env
        self.cfg = cfg
        seeds = np.random.SeedSequence(cfg.seed).spawn(4)
        self.actor = Mlp(
            env.state_dim, cfg.hidden, env.action_space.n_actions, "softmax",
            rng=np.random.default_rng(seeds[0]),
        )
        self.critic = Mlp(env.state_dim, cfg.hidden, 1, "scalar", rng=np.random.default_rng(seeds[1]))
        self.workload_rng = np.random.default_rng(seeds[2])
        self.action_rng = np.random.default_rng(seeds[3])
        if cfg.optimizer == "adam":
            self.actor_opt: AdamOptimizer | None = AdamOptimizer(self.actor, eps=cfg.adam_eps)
            self.critic_opt: AdamOptimizer | None = AdamOptimizer(self.critic, eps=cfg.adam_eps)
        else:
            self.actor_opt = None
            self.critic_opt = None
        self.replay_buffer: list[Transition] = []
        self._episode = 0
        self._reward_history: list[float] = []
        self._best_ma = -np.inf
        self._best_params: tuple[Mlp, Mlp] | None = None

    def _update(self, transitions: list[Transition]) -> None:
        cfg = self.cfg
        env = self.env
        batch = transitions
        if cfg.replay == "uniform":
            self.replay_buffer.extend(transitions)
            if len(self.replay_buffer) > cfg.replay_capacity:
                del self.replay_buffer[: len(self.replay_buffer) - cfg.replay_capacity]
            n_batch = cfg.replay_batch or len(transitions)
            picks = self.action_rng.integers(len(self.replay_buffer), size=n_batch)
            batch = [self.replay_buffer[i] for i in picks]

        encoded = [encode(t.state, env.norms) for t in batch]
        v_cur = [forward_critic(self.critic, x) for x in encoded]
        v_next = [
            0.0 if t.next_state is None else forward_critic(self.critic, encode(t.next_state, env.norms))
            for t in batch
        ]

        inv_n = 1.0 / len(batch)
        actor_grads = self.actor.zero_grads()
        critic_grads = self.critic.zero_grads()
        for x, t, vc, vn in zip(encoded, batch, v_cur, v_next):
            adv = advantage(t.reward, vn, vc, cfg.gamma, terminal=t.next_state is None)
            actor_grads.add_(backward_policy(self.actor, x, t.action_index, adv).scaled(inv_n))
            target = t.reward if t.next_state is None else t.reward + cfg.gamma * vn
            critic_grads.add_(backward_value(self.critic, x, target).scaled(inv_n))

        # actor first, then critic; advantages always use the pre-update critic
        if self.actor_opt is not None:
            self.actor_opt.step(self.actor, actor_grads, cfg.beta_actor, cfg.grad_clip_norm)
            self.critic_opt.step(self.critic, critic_grads, cfg.beta_critic, cfg.grad_clip_norm)
        else:
            apply(self.actor, actor_grads, cfg.beta_actor, cfg.grad_clip_norm)
            apply(self.critic, critic_grads, cfg.beta_critic, cfg.grad_clip_norm)

    def train_episode(self) -> EpisodeStats:
        """Roll out one episode from an empty system and apply one update."""
        t0 = time.perf_counter()
        cfg = self.cfg
        tasks = generate_arrivals(self.env.workload, cfg.episode_len, rng=self.workload_rng)
        policy_args = (
            self.actor, self.env.action_space, self.env.norms, cfg.epsilon, self.action_rng,
        )
        if cfg.reward_mode == "estimate":
            policy = _EstimatingActorPolicy(self.env, *policy_args)
        else:
            policy = ActorPolicy(*policy_args)
        records = self.env.rollout(policy, tasks)
        delays = policy.estimates if cfg.reward_mode == "estimate" else None
        transitions = transitions_from_records(
            records, self.env.action_space, cfg.reward_scale, delays=delays
        )
        if transitions:
            self._update(transitions)
        rewards = [t.reward for t in transitions]
        total = float(sum(rewards))
        mean = total / len(rewards) if rewards else 0.0
        mean_wr = (
            sum(r.weighted_response for r in records) / (len(records) * cfg.reward_scale)
            if records
            else 0.0
        )
        stats = EpisodeStats(
            episode=self._episode,
            total_reward=total,
            mean_reward=mean,
            mean_weighted_response_s=mean_wr,
            wallclock_s=time.perf_counter() - t0,
        )
        self._episode += 1
        if cfg.select == "best_reward":
            self._reward_history.append(mean)
            window = self._reward_history[-cfg.select_window :]
            ma = sum(window) / len(window)
            if len(self._reward_history) >= cfg.select_window and ma > self._best_ma:
                self._best_ma = ma
                self._best_params = (self.actor.copy(), self.critic.copy())
        return stats

    def train(self) -> TrainResult:
        stats = [self.train_episode() for _ in range(self.cfg.episodes)]
        if self.cfg.select == "best_reward" and self._best_params is not None:
            actor, critic = self._best_params
            return TrainResult(actor=actor, critic=critic, stats=stats)
        return TrainResult(actor=self.actor, critic=self.critic, stats=stats)


def train(env: OffloadEnv, cfg: AgentConfig) -> TrainResult:
    return Trainer(env, cfg).train()


def evaluate(
    env: OffloadEnv,
    policy,
    tasks,
    reward_scale: float = 100.0,
) -> EvalStats:
    """Run a policy over a task stream and aggregate measured delays.

    Weighted response figures are divided by reward_scale so they live on
    the same axis the learner optimizes.
    """
    records = env.rollout(policy, tasks) if tasks else []
    if not records:
        return EvalStats(records=[], mean_weighted_response_s=0.0, mean_response_s=0.0, per_weight={})
    n = len(records)
    mean_wr = sum(r.weighted_response for r in records) / (n * reward_scale)
    mean_resp = sum(r.response for r in records) / n
    per_weight: dict[float, dict[str, float]] = {}
    for w in sorted({r.weight for r in records}):
        group = [r for r in records if r.weight == w]
        m = len(group)
        per_weight[w] = {
            "mean_net_delay_s": sum(r.t_net for r in group) / m,
            "mean_comp_delay_s": sum(r.t_comp for r in group) / m,
            "mean_response_s": sum(r.response for r in group) / m,
            "mean_weighted_response_s": sum(r.weighted_response for r in group) / (m * reward_scale),
            "n_tasks": float(m),
        }
    return EvalStats(
        records=records,
        mean_weighted_response_s=mean_wr,
        mean_response_s=mean_resp,
        per_weight=per_weight,
    )


def evaluate_actor(
    env: OffloadEnv,
    actor: Mlp,
    n_tasks: int,
    seed: int,
    reward_scale: float = 100.0,
) -> EvalStats:
    """Greedy (epsilon = 0) rollout of a trained actor over n_tasks arrivals."""
    if n_tasks < 0:
        raise ValueError("n_tasks must be nonnegative")
    seeds = np.random.SeedSequence(seed).spawn(2)
    tasks = generate_arrivals(env.workload, n_tasks, rng=np.random.default_rng(seeds[0]))
    policy = ActorPolicy(
        actor, env.action_space, env.norms, epsilon=0.0, rng=np.random.default_rng(seeds[1])
    )
    return evaluate(env, policy, tasks, reward_scale=reward_scale)


def write_training_log(path, stats: list[EpisodeStats], epsilon: float) -> None:
    """Per-episode delimited log: episode, rewards, response, epsilon, wallclock."""
    with open(path, "w") as fh:
        fh.write("episode,mean_reward,mean_weighted_response_s,epsilon,wallclock_s\n")
        for s in stats:
            fh.write(
                f"{s.episode},{s.mean_reward!r},{s.mean_weighted_response_s!r},"
                f"{epsilon!r},{s.wallclock_s!r}\n"
            )
