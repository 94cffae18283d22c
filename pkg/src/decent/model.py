"""Closed-form delay formulas for the edge-offloading system.

All functions here are pure: they take sizes, rates and queue snapshots and
return seconds (or a weighted-seconds objective value). Units are fixed at
bits, bits/s, CPU cycles, cycles/s and seconds; any conversion happens at
config parse time, never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def _require_finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return float(value)


@dataclass(slots=True)
class Task:
    """One offloadable job.

    alloc_cycles_per_s is unset (None) until a scheduling action assigns the
    task a resource block; it must then be a member of the configured block
    set and no larger than the destination server's capacity.
    """

    id: int
    size_bits: float
    weight: float
    arrival_time: float
    alloc_cycles_per_s: float | None = None

    def __post_init__(self) -> None:
        # Generated workloads always have positive sizes; zero is allowed so
        # degenerate probe tasks can exercise the formulas directly.
        if not (math.isfinite(self.size_bits) and self.size_bits >= 0):
            raise ValueError(f"task {self.id}: size_bits must be nonnegative, got {self.size_bits!r}")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ValueError(f"task {self.id}: weight must be positive, got {self.weight!r}")


@dataclass(frozen=True, slots=True)
class ServerConfig:
    """Static description of one edge server and its link from the base station."""

    id: int
    capacity_cycles_per_s: float
    distance_km: float
    link_bps: float

    def __post_init__(self) -> None:
        if self.capacity_cycles_per_s <= 0:
            raise ValueError(f"server {self.id}: capacity must be positive")
        if self.link_bps <= 0:
            raise ValueError(f"server {self.id}: link_bps must be positive")
        if self.distance_km < 0:
            raise ValueError(f"server {self.id}: distance_km must be nonnegative")


@dataclass(frozen=True, slots=True)
class DelayParams:
    """Propagation and computation-intensity coefficients.

    alpha_s_per_km and zeta_s define the base-station-to-server propagation
    delay as alpha * distance + zeta; mu_cycles_per_bit maps task size in
    bits to required CPU cycles.
    """

    alpha_s_per_km: float
    zeta_s: float
    mu_cycles_per_bit: float

    def __post_init__(self) -> None:
        if self.mu_cycles_per_bit <= 0:
            raise ValueError("mu_cycles_per_bit must be positive")
        if self.alpha_s_per_km < 0 or self.zeta_s < 0:
            raise ValueError("alpha_s_per_km and zeta_s must be nonnegative")


@dataclass(slots=True)
class QueueSnapshot:
    """Queue contents of one server at a single instant.

    comm_backlog_bits: total bits ahead in the communication queue.
    comp_backlog: (size_bits, alloc_cycles_per_s) per task ahead in the
    computing queue; every entry must have a positive allocation.
    """

    comm_backlog_bits: float = 0.0
    comp_backlog: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.comm_backlog_bits < 0:
            raise ValueError("comm_backlog_bits must be nonnegative")
        for size_bits, alloc in self.comp_backlog:
            if size_bits < 0:
                raise ValueError("comp_backlog sizes must be nonnegative")
            if alloc <= 0:
                raise ValueError("comp_backlog allocations must be positive")


def transmission_time(size_bits: float, link_bps: float) -> float:
    """Seconds to push size_bits through a link of link_bps."""
    size_bits = _require_finite("size_bits", size_bits)
    link_bps = _require_finite("link_bps", link_bps)
    if size_bits < 0:
        raise ValueError(f"size_bits must be nonnegative, got {size_bits}")
    if link_bps <= 0:
        raise ValueError(f"link_bps must be positive, got {link_bps}")
    return size_bits / link_bps


def e2e_delay(distance_km: float, params: DelayParams) -> float:
    """Propagation delay between the base station and a server at distance_km."""
    distance_km = _require_finite("distance_km", distance_km)
    if distance_km < 0:
        raise ValueError(f"distance_km must be nonnegative, got {distance_km}")
    return params.alpha_s_per_km * distance_km + params.zeta_s


def comm_wait(comm_backlog_bits: float, link_bps: float) -> float:
    """Seconds a new arrival waits behind comm_backlog_bits on one link."""
    comm_backlog_bits = _require_finite("comm_backlog_bits", comm_backlog_bits)
    link_bps = _require_finite("link_bps", link_bps)
    if comm_backlog_bits < 0:
        raise ValueError(f"comm_backlog_bits must be nonnegative, got {comm_backlog_bits}")
    if link_bps <= 0:
        raise ValueError(f"link_bps must be positive, got {link_bps}")
    return comm_backlog_bits / link_bps


def network_delay(
    task: Task, server: ServerConfig, snapshot: QueueSnapshot, params: DelayParams
) -> float:
    """Total network delay: transmission + propagation + queue wait.

    The snapshot must describe the server's communication queue at the
    instant of the task's arrival.
    """
    return (
        transmission_time(task.size_bits, server.link_bps)
        + e2e_delay(server.distance_km, params)
        + comm_wait(snapshot.comm_backlog_bits, server.link_bps)
    )


def exec_time(size_bits: float, mu: float, alloc_cycles_per_s: float) -> float:
    """Seconds to execute a size_bits task on alloc_cycles_per_s of CPU.

    A zero allocation means "not scheduled here" and is never a valid
    execution rate.
    """
    size_bits = _require_finite("size_bits", size_bits)
    alloc_cycles_per_s = _require_finite("alloc_cycles_per_s", alloc_cycles_per_s)
    if size_bits < 0:
        raise ValueError(f"size_bits must be nonnegative, got {size_bits}")
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if alloc_cycles_per_s <= 0:
        raise ValueError(f"alloc_cycles_per_s must be positive, got {alloc_cycles_per_s}")
    return mu * size_bits / alloc_cycles_per_s


def computing_delay(task: Task, snapshot: QueueSnapshot, mu: float) -> float:
    """Execution time of the task plus the backlog ahead of it.

    The wait term sums the execution times of every queued entry in the
    snapshot; the task's own allocation must already be set.
    """
    if task.alloc_cycles_per_s is None:
        raise ValueError(f"task {task.id}: allocation not set; cannot compute execution time")
    wait = 0.0
    for size_bits, alloc in snapshot.comp_backlog:
        wait += exec_time(size_bits, mu, alloc)
    if task.size_bits == 0:
        return wait
    return exec_time(task.size_bits, mu, task.alloc_cycles_per_s) + wait


def weighted_response(weight: float, net_delay: float, comp_delay: float) -> float:
    """Priority-weighted response time: weight * (net delay + computing delay)."""
    weight = _require_finite("weight", weight)
    net_delay = _require_finite("net_delay", net_delay)
    comp_delay = _require_finite("comp_delay", comp_delay)
    if weight < 0 or net_delay < 0 or comp_delay < 0:
        raise ValueError("weighted_response inputs must be nonnegative")
    return weight * (net_delay + comp_delay)
