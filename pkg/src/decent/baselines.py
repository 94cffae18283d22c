"""Comparison policies sharing the simulator's Policy interface.

Both heuristics request the largest resource block; neither looks at task
priority. Ties always break toward the lowest server index so decisions
are fully deterministic.
"""

from __future__ import annotations

import numpy as np

from .mdp import Action, MdpState
from .model import DelayParams, ServerConfig


class NearestServerPolicy:
    """Always offload to the server with the lowest propagation delay."""

    def __init__(self, servers: list[ServerConfig], params: DelayParams, blocks: list[float]):
        e2e = [params.alpha_s_per_km * s.distance_km + params.zeta_s for s in servers]
        self._server = int(np.argmin(e2e))  # argmin keeps the first of ties
        self._alloc = max(blocks)

    def decide(self, state: MdpState) -> Action:
        return Action(server=self._server, alloc_cycles_per_s=self._alloc)


class LargestServerPolicy:
    """Offload to the server with the most free CPU at the arrival instant."""

    def __init__(self, blocks: list[float]):
        self._alloc = max(blocks)

    def decide(self, state: MdpState) -> Action:
        best = 0
        best_free = state.free_cycles[0]
        for k in range(1, len(state.free_cycles)):
            if state.free_cycles[k] > best_free:
                best = k
                best_free = state.free_cycles[k]
        return Action(server=best, alloc_cycles_per_s=self._alloc)


class RandomPolicy:
    """Uniform random valid action; smoke tests only."""

    def __init__(self, n_servers: int, blocks: list[float], rng: np.random.Generator):
        self._n_servers = n_servers
        self._blocks = list(blocks)
        self._rng = rng

    def decide(self, state: MdpState) -> Action:
        return Action(
            server=int(self._rng.integers(self._n_servers)),
            alloc_cycles_per_s=self._blocks[int(self._rng.integers(len(self._blocks)))],
        )
