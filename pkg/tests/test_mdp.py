"""Tests for state encoding, action indexing and the reward function."""

import numpy as np
import pytest

from decent.mdp import (
    Action,
    ActionSpace,
    MdpState,
    NormalizationConfig,
    encode,
    reward,
)

BLOCKS = [1e7, 2e7, 4e7, 6e7, 8e7, 1e8, 1.2e8, 1.4e8, 1.6e8, 2e8]


def _idle_state(weight=100.0, size=3e7, k=4):
    return MdpState(
        weight=weight,
        size_bits=size,
        free_cycles=(2e8,) * k,
        queued_cycles=(0.0,) * k,
        comm_wait_s=(0.0,) * k,
    )


class TestEncode:
    def test_idle_reference(self):
        vec = encode(_idle_state(), NormalizationConfig())
        expected = np.array([1.0, 1.0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0])
        assert vec.shape == (14,)
        np.testing.assert_allclose(vec, expected)

    def test_all_zero_state(self):
        state = MdpState(0.0, 0.0, (0.0,) * 4, (0.0,) * 4, (0.0,) * 4)
        assert not encode(state, NormalizationConfig()).any()

    def test_injective_on_distinct_states(self):
        norms = NormalizationConfig()
        rng = np.random.default_rng(0)
        seen = set()
        for _ in range(50):
            state = MdpState(
                weight=float(rng.choice([10, 20, 50, 100])),
                size_bits=float(rng.uniform(1e6, 1e8)),
                free_cycles=tuple(rng.uniform(0, 2e8, 4)),
                queued_cycles=tuple(rng.uniform(0, 1e8, 4)),
                comm_wait_s=tuple(rng.uniform(0, 1, 4)),
            )
            seen.add(encode(state, norms).tobytes())
        assert len(seen) == 50

    def test_positive_scales_required(self):
        with pytest.raises(ValueError):
            NormalizationConfig(weight_scale=0.0)


class TestActionSpace:
    def test_first_index(self):
        space = ActionSpace(4, BLOCKS)
        assert space.index(0, 0) == 0

    def test_last_index(self):
        space = ActionSpace(4, BLOCKS)
        assert space.index(3, 9) == 39
        assert space.n_actions == 40

    def test_roundtrip_bijection(self):
        space = ActionSpace(4, BLOCKS)
        for server in range(4):
            for rank in range(10):
                idx = space.index(server, rank)
                assert space.unpack(idx) == (server, rank)
                action = space.action(idx)
                assert space.index_of(action) == idx

    def test_out_of_range(self):
        space = ActionSpace(4, BLOCKS)
        with pytest.raises(ValueError):
            space.index(4, 0)
        with pytest.raises(ValueError):
            space.action(40)
        with pytest.raises(ValueError):
            space.index_of(Action(server=0, alloc_cycles_per_s=3e7))

    def test_blocks_sorted_ascending(self):
        space = ActionSpace(2, [2e8, 1e7, 1e8])
        assert space.blocks == [1e7, 1e8, 2e8]


class TestReward:
    def test_reference_negated_weighted_response(self):
        assert reward(50.0, 0.045, 0.0225, scale=1.0) == pytest.approx(-3.375, abs=1e-9)

    def test_zero_delays(self):
        assert reward(123.0, 0.0, 0.0) == 0.0

    def test_scaled(self):
        assert reward(10.0, 0.1, 0.1, scale=10.0) == pytest.approx(-0.2, abs=1e-12)

    def test_scale_is_argmax_invariant(self):
        rng = np.random.default_rng(7)
        delays = [(rng.uniform(0, 1), rng.uniform(0, 1)) for _ in range(8)]
        r1 = [reward(50.0, tn, tc, scale=1.0) for tn, tc in delays]
        r2 = [reward(50.0, tn, tc, scale=100.0) for tn, tc in delays]
        assert int(np.argmax(r1)) == int(np.argmax(r2))

    def test_invalid(self):
        with pytest.raises(ValueError):
            reward(10.0, 0.1, 0.1, scale=0.0)
        with pytest.raises(ValueError):
            reward(10.0, -0.1, 0.1)
