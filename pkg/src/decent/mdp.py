"""State encoding, joint action space and reward for the offloading MDP.

A decision is made once per task arrival. The observation is the arriving
task's weight and size plus, for each of the K servers, its free CPU, the
CPU workload queued behind it and the time backlog of its communication
queue (2 + 3K numbers). An action jointly picks the destination server and
the CPU resource block granted to the task.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, slots=True)
class MdpState:
    """Raw (unnormalized) observation at one task arrival."""

    weight: float
    size_bits: float
    free_cycles: tuple[float, ...]
    queued_cycles: tuple[float, ...]
    comm_wait_s: tuple[float, ...]

    @property
    def n_servers(self) -> int:
        return len(self.free_cycles)


@dataclass(frozen=True, slots=True)
class Action:
    """Joint offloading decision: destination server and CPU resource block."""

    server: int
    alloc_cycles_per_s: float


@dataclass(frozen=True, slots=True)
class Transition:
    """One (state, action, reward, next state) record for training."""

    state: MdpState
    action_index: int
    reward: float
    next_state: MdpState | None  # None marks the episode's final decision


class ActionSpace:
    """Enumeration of the K * |blocks| joint actions.

    Index layout is server-major: index = server * n_blocks + block_rank,
    with blocks kept in ascending order.
    """

    def __init__(self, n_servers: int, blocks_cycles_per_s: list[float]):
        if n_servers < 1:
            raise ValueError("need at least one server")
        if not blocks_cycles_per_s:
            raise ValueError("need at least one resource block")
        if any(b <= 0 for b in blocks_cycles_per_s):
            raise ValueError("resource blocks must be positive")
        self.n_servers = n_servers
        self.blocks = sorted(float(b) for b in blocks_cycles_per_s)
        self.n_blocks = len(self.blocks)
        self.n_actions = n_servers * self.n_blocks

    def index(self, server: int, block_rank: int) -> int:
        if not 0 <= server < self.n_servers:
            raise ValueError(f"server {server} out of range [0, {self.n_servers})")
        if not 0 <= block_rank < self.n_blocks:
            raise ValueError(f"block rank {block_rank} out of range [0, {self.n_blocks})")
        return server * self.n_blocks + block_rank

    def unpack(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n_actions:
            raise ValueError(f"action index {index} out of range [0, {self.n_actions})")
        return divmod(index, self.n_blocks)

    def action(self, index: int) -> Action:
        server, rank = self.unpack(index)
        return Action(server=server, alloc_cycles_per_s=self.blocks[rank])

    def index_of(self, action: Action) -> int:
        try:
            rank = self.blocks.index(float(action.alloc_cycles_per_s))
        except ValueError:
            raise ValueError(
                f"allocation {action.alloc_cycles_per_s} is not a configured resource block"
            ) from None
        return self.index(action.server, rank)


@dataclass(frozen=True, slots=True)
class NormalizationConfig:
    """Per-feature-group scales dividing the raw state before the networks.

    Weight is divided by the largest priority, size by the mean task size,
    CPU features by the server capacity and time features by one second.
    """

    weight_scale: float = 100.0
    size_scale: float = 3.0e7
    cycles_scale: float = 2.0e8
    seconds_scale: float = 1.0

    def __post_init__(self) -> None:
        for name in ("weight_scale", "size_scale", "cycles_scale", "seconds_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def encode(state: MdpState, norms: NormalizationConfig) -> np.ndarray:
    """Normalized feature vector of length 2 + 3K, float64."""
    k = state.n_servers
    out = np.empty(2 + 3 * k, dtype=np.float64)
    out[0] = state.weight / norms.weight_scale
    out[1] = state.size_bits / norms.size_scale
    out[2 : 2 + k] = np.asarray(state.free_cycles, dtype=np.float64) / norms.cycles_scale
    out[2 + k : 2 + 2 * k] = np.asarray(state.queued_cycles, dtype=np.float64) / norms.cycles_scale
    out[2 + 2 * k :] = np.asarray(state.comm_wait_s, dtype=np.float64) / norms.seconds_scale
    return out


def reward(weight: float, t_net: float, t_comp: float, scale: float = 100.0) -> float:
    """Negative weighted response time, divided by the reward scale.

    The scale (default: the largest priority) keeps advantage magnitudes
    near unity; it never changes which action is best.
    """
    if scale <= 0:
        raise ValueError("reward scale must be positive")
    if t_net < 0 or t_comp < 0:
        raise ValueError("delays must be nonnegative")
    return -weight * (t_net + t_comp) / scale
