"""Agent tests: action selection, advantage, episode training and evaluation."""

import dataclasses

import numpy as np
import pytest

from decent.agent import (
    ActorPolicy,
    AgentConfig,
    OffloadEnv,
    Trainer,
    advantage,
    evaluate,
    evaluate_actor,
    select_action,
    transitions_from_records,
)
from decent.mdp import ActionSpace, MdpState, NormalizationConfig
from decent.model import DelayParams, ServerConfig
from decent.neural import Mlp, backward_policy, forward_critic
from decent.sim import WorkloadConfig, generate_arrivals

BLOCKS = [1e7, 2e7, 4e7, 6e7, 8e7, 1e8, 1.2e8, 1.4e8, 1.6e8, 2e8]


def make_env(**workload_kwargs):
    servers = [
        ServerConfig(id=k, capacity_cycles_per_s=2e8, distance_km=float(k), link_bps=2e9)
        for k in range(4)
    ]
    params = DelayParams(alpha_s_per_km=0.03, zeta_s=0.03, mu_cycles_per_bit=0.15)
    return OffloadEnv(servers, params, BLOCKS, WorkloadConfig(**workload_kwargs))


def idle_state(weight=50.0):
    return MdpState(weight, 3e7, (2e8,) * 4, (0.0,) * 4, (0.0,) * 4)


class TestSelectAction:
    def test_full_epsilon_is_uniform(self):
        env = make_env(rng_seed=0)
        actor = Mlp(env.state_dim, 8, 40, "softmax", rng=np.random.default_rng(0))
        rng = np.random.default_rng(1)
        counts = np.zeros(40)
        n = 10_000
        for _ in range(n):
            action = select_action(actor, idle_state(), 1.0, rng, env.action_space, env.norms)
            counts[env.action_space.index_of(action)] += 1
        # chi-squared against uniform, 39 dof: 99.9% critical value ~= 72.1
        expected = n / 40
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < 72.1

    def test_zero_epsilon_matches_actor_distribution(self):
        env = make_env(rng_seed=0)
        actor = Mlp(env.state_dim, 8, 40, "softmax", rng=np.random.default_rng(2))
        # force a spiked distribution through one large output bias
        actor.b2[7] = 6.0
        rng = np.random.default_rng(3)
        n = 4000
        hits = sum(
            env.action_space.index_of(
                select_action(actor, idle_state(), 0.0, rng, env.action_space, env.norms)
            )
            == 7
            for _ in range(n)
        )
        from decent.mdp import encode
        from decent.neural import forward_actor

        p7 = forward_actor(actor, encode(idle_state(), env.norms))[7]
        assert abs(hits / n - p7) < 4 * np.sqrt(p7 * (1 - p7) / n)

    def test_seeded_determinism(self):
        env = make_env(rng_seed=0)
        actor = Mlp(env.state_dim, 8, 40, "softmax", rng=np.random.default_rng(4))

        def draw_sequence():
            rng = np.random.default_rng(5)
            return [
                env.action_space.index_of(
                    select_action(actor, idle_state(), 0.1, rng, env.action_space, env.norms)
                )
                for _ in range(50)
            ]

        assert draw_sequence() == draw_sequence()


class TestAdvantage:
    def test_reference(self):
        assert advantage(-2.0, -10.0, -11.0, 0.99, False) == pytest.approx(-0.9, abs=1e-12)

    def test_zeros(self):
        assert advantage(0.0, 0.0, 0.0, 0.5, False) == 0.0

    def test_terminal_ignores_next_value(self):
        assert advantage(-5.0, 123.0, -5.0, 0.99, True) == 0.0

    def test_gamma_range(self):
        with pytest.raises(ValueError):
            advantage(0.0, 0.0, 0.0, 1.5, False)

    def test_perfect_critic_zero_mean_on_synthetic_mdp(self):
        # two-state cycle with stochastic rewards; V solves the Bellman pair
        gamma = 0.9
        mu = {0: -2.0, 1: -1.0}
        v1 = (mu[1] + gamma * mu[0]) / (1 - gamma * gamma)
        v = {1: v1, 0: mu[0] + gamma * v1}
        rng = np.random.default_rng(6)
        n = 20_000
        sigma = 0.5
        total = 0.0
        state = 0
        for _ in range(n):
            r = mu[state] + sigma * rng.normal()
            nxt = 1 - state
            total += advantage(r, v[nxt], v[state], gamma, False)
            state = nxt
        assert abs(total / n) < 4 * sigma / np.sqrt(n)


class TestTrainEpisode:
    def test_zero_episodes_leaves_networks_unchanged(self):
        env = make_env(rng_seed=7)
        cfg = AgentConfig(episodes=0, seed=1)
        trainer = Trainer(env, cfg)
        before = [p.copy() for p in trainer.actor.params()]
        trainer.train()
        for b, a in zip(before, trainer.actor.params()):
            np.testing.assert_array_equal(b, a)

    def test_single_transition_episode_matches_manual_update(self):
        env = make_env(rng_seed=8)
        cfg = AgentConfig(episodes=1, episode_len=1, seed=2, gamma=0.9)
        trainer = Trainer(env, cfg)
        actor_before = trainer.actor.copy()
        critic_before = trainer.critic.copy()

        # replay the exact streams the trainer will consume
        seeds = np.random.SeedSequence(2).spawn(4)
        wl_rng = np.random.default_rng(seeds[2])
        act_rng = np.random.default_rng(seeds[3])
        tasks = generate_arrivals(env.workload, 1, rng=wl_rng)
        shadow_env = make_env(rng_seed=8)
        policy = ActorPolicy(actor_before, shadow_env.action_space, shadow_env.norms, cfg.epsilon, act_rng)
        records = shadow_env.rollout(policy, tasks)
        transitions = transitions_from_records(records, shadow_env.action_space, cfg.reward_scale)
        assert len(transitions) == 1
        t = transitions[0]

        from decent.mdp import encode
        from decent.neural import apply, backward_value

        x = encode(t.state, shadow_env.norms)
        v = forward_critic(critic_before, x)
        adv = advantage(t.reward, 0.0, v, cfg.gamma, terminal=True)
        expected_actor = actor_before.copy()
        apply(expected_actor, backward_policy(expected_actor, x, t.action_index, adv),
              cfg.beta_actor, cfg.grad_clip_norm)

        trainer.train()
        for got, want in zip(trainer.actor.params(), expected_actor.params()):
            np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_episode_reward_sum_matches_negated_objective(self):
        env = make_env(rng_seed=9)
        cfg = AgentConfig(episodes=1, episode_len=32, seed=3)
        trainer = Trainer(env, cfg)
        stats = trainer.train_episode()
        # reward sum == -(sum of weighted responses)/scale for measured mode
        assert stats.total_reward == pytest.approx(
            -stats.mean_weighted_response_s * 32, rel=1e-9
        )

    def test_buffer_cleared_each_episode(self):
        env = make_env(rng_seed=10)
        cfg = AgentConfig(episodes=3, episode_len=4, seed=4)
        trainer = Trainer(env, cfg)
        trainer.train()
        assert trainer.replay_buffer == []  # on-policy mode never retains

    def test_uniform_replay_mode_retains(self):
        env = make_env(rng_seed=11)
        cfg = AgentConfig(episodes=3, episode_len=4, seed=5, replay="uniform")
        trainer = Trainer(env, cfg)
        trainer.train()
        assert len(trainer.replay_buffer) == 12


class TestEvaluate:
    def test_untrained_actor_smoke(self):
        env = make_env(rng_seed=12)
        actor = Mlp(env.state_dim, 8, 40, "softmax", rng=np.random.default_rng(13))
        stats = evaluate_actor(env, actor, 64, seed=1)
        assert len(stats.records) == 64
        assert np.isfinite(stats.mean_weighted_response_s)
        assert stats.mean_weighted_response_s > 0

    def test_empty_eval(self):
        env = make_env(rng_seed=13)
        actor = Mlp(env.state_dim, 8, 40, "softmax", rng=np.random.default_rng(14))
        stats = evaluate_actor(env, actor, 0, seed=1)
        assert stats.records == []
        assert stats.mean_weighted_response_s == 0.0

    def test_seeded_evaluation_reproducible(self):
        env = make_env(rng_seed=14)
        actor = Mlp(env.state_dim, 8, 40, "softmax", rng=np.random.default_rng(15))
        a = evaluate_actor(env, actor, 50, seed=7)
        b = evaluate_actor(env, actor, 50, seed=7)
        assert a.mean_weighted_response_s == b.mean_weighted_response_s
        assert [r.task_id for r in a.records] == [r.task_id for r in b.records]

    def test_per_weight_groups(self):
        env = make_env(rng_seed=15)
        actor = Mlp(env.state_dim, 8, 40, "softmax", rng=np.random.default_rng(16))
        stats = evaluate_actor(env, actor, 400, seed=2)
        assert set(stats.per_weight) <= {10.0, 20.0, 50.0, 100.0}
        assert sum(g["n_tasks"] for g in stats.per_weight.values()) == 400


class TestConfigValidation:
    def test_bad_values_rejected(self):
        for kwargs in (
            {"gamma": 1.5},
            {"beta_actor": 0.0},
            {"epsilon": -0.1},
            {"optimizer": "sgdm"},
            {"reward_mode": "oracle"},
            {"replay": "prioritized"},
        ):
            with pytest.raises(ValueError):
                AgentConfig(**kwargs)
