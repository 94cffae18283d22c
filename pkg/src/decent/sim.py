"""Discrete-event simulation of one base station feeding K edge servers.

Each server has a FIFO communication queue (one transfer at a time on its
link; propagation overlaps with later transfers) and a FIFO computing queue
with head-of-line blocking: the head task starts executing as soon as its
CPU allocation fits into the server's free capacity, and later tasks never
jump ahead. The simulator measures ground-truth network and computing
delays for every task under any policy.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Protocol

import numpy as np

from .mdp import Action, MdpState
from .model import DelayParams, QueueSnapshot, ServerConfig, Task


class SimulationError(RuntimeError):
    pass


class InvalidActionError(SimulationError):
    """A policy returned an action outside the feasible set (caller bug)."""


class EventKind(IntEnum):
    # Numeric order is the tie-break priority at equal timestamps: free
    # resources first, add work later, observe new arrivals last.
    EXECUTION_COMPLETE = 0
    COMPUTE_ARRIVAL = 1
    TRANSFER_COMPLETE = 2
    ARRIVAL = 3


_KIND_NAMES = {
    EventKind.EXECUTION_COMPLETE: "execution_complete",
    EventKind.COMPUTE_ARRIVAL: "compute_arrival",
    EventKind.TRANSFER_COMPLETE: "transfer_complete",
    EventKind.ARRIVAL: "arrival",
}


@dataclass(frozen=True, slots=True)
class Event:
    time: float
    kind: EventKind
    task_id: int
    server_id: int


@dataclass(slots=True)
class WorkloadConfig:
    """Poisson arrivals with normal task sizes and uniform priority draws."""

    arrival_rate_per_s: float = 50.0
    size_mean_bits: float = 3.0e7
    size_std_bits: float = 3.0e5
    weight_set: tuple[float, ...] = (10.0, 20.0, 50.0, 100.0)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.arrival_rate_per_s <= 0:
            raise ValueError("arrival_rate_per_s must be positive")
        if self.size_mean_bits <= 0:
            raise ValueError("size_mean_bits must be positive")
        if self.size_std_bits < 0:
            raise ValueError("size_std_bits must be nonnegative")
        if not self.weight_set or any(w <= 0 for w in self.weight_set):
            raise ValueError("weight_set must be nonempty with positive entries")


def generate_arrivals(
    workload: WorkloadConfig, count: int, rng: np.random.Generator | None = None
) -> list[Task]:
    """Draw `count` tasks with exponential gaps, normal sizes, uniform weights.

    Passing an existing generator continues its stream (used to chain
    training episodes); otherwise a fresh stream is seeded from the config,
    so equal seeds give identical task lists. Sizes are truncated below at
    one bit.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if rng is None:
        rng = np.random.default_rng(workload.rng_seed)
    gaps = rng.exponential(1.0 / workload.arrival_rate_per_s, size=count)
    sizes = rng.normal(workload.size_mean_bits, workload.size_std_bits, size=count)
    weights = rng.choice(np.asarray(workload.weight_set, dtype=np.float64), size=count)
    arrivals = np.cumsum(gaps)
    return [
        Task(
            id=i,
            size_bits=float(max(sizes[i], 1.0)),
            weight=float(weights[i]),
            arrival_time=float(arrivals[i]),
        )
        for i in range(count)
    ]


@dataclass(slots=True)
class TaskRecord:
    """Lifecycle timestamps and measured delays for one completed task."""

    task_id: int
    weight: float
    size_bits: float
    server: int
    alloc_cycles_per_s: float
    arrival: float
    transfer_start: float = -1.0
    transfer_end: float = -1.0
    server_arrival: float = -1.0
    exec_start: float = -1.0
    completion: float = -1.0
    state: MdpState | None = None
    action: Action | None = None

    @property
    def t_net(self) -> float:
        return self.server_arrival - self.arrival

    @property
    def t_comp(self) -> float:
        return self.completion - self.server_arrival

    @property
    def response(self) -> float:
        return self.t_net + self.t_comp

    @property
    def weighted_response(self) -> float:
        return self.weight * self.response


class Policy(Protocol):
    def decide(self, state: MdpState) -> Action: ...


@dataclass(slots=True)
class _ServerState:
    config: ServerConfig
    e2e_s: float
    free_cycles: float
    comp_queue: deque = field(default_factory=deque)
    running: dict[int, float] = field(default_factory=dict)  # task id -> alloc
    queued_cycles: float = 0.0
    comm_queue: deque = field(default_factory=deque)
    transferring: int | None = None
    comm_bits: float = 0.0  # waiting + in-flight bits


class Simulator:
    """One base station, K servers, event-driven task lifecycle.

    Instances are single-threaded; run independent copies for parallel
    experiments. `on_event` (if set) is called with each applied Event, in
    order, and backs both the trace export and test instrumentation.
    """

    def __init__(
        self,
        servers: list[ServerConfig],
        params: DelayParams,
        blocks_cycles_per_s: list[float],
        on_event: Callable[[Event], None] | None = None,
    ):
        if not servers:
            raise ValueError("need at least one server")
        self.server_configs = list(servers)
        self.params = params
        self.blocks = sorted(float(b) for b in blocks_cycles_per_s)
        self._block_set = set(self.blocks)
        self.on_event = on_event
        self.reset()

    def reset(self) -> None:
        self.clock = 0.0
        self._heap: list[tuple[float, int, int]] = []
        self._tasks: dict[int, Task] = {}
        self._records: dict[int, TaskRecord] = {}
        self._decision_order: list[int] = []
        self.servers = [
            _ServerState(
                config=cfg,
                e2e_s=self.params.alpha_s_per_km * cfg.distance_km + self.params.zeta_s,
                free_cycles=cfg.capacity_cycles_per_s,
            )
            for cfg in self.server_configs
        ]
        self._policy: Policy | None = None

    # -- observation ---------------------------------------------------------

    def snapshot(self, server_id: int) -> QueueSnapshot:
        """Queue contents of one server at the current instant.

        comp_backlog lists waiting (not yet executing) tasks in FIFO order;
        comm_backlog_bits counts waiting plus in-flight bits.
        """
        server = self.servers[server_id]
        return QueueSnapshot(
            comm_backlog_bits=max(server.comm_bits, 0.0),
            comp_backlog=[
                (self._tasks[tid].size_bits, self._tasks[tid].alloc_cycles_per_s)
                for tid in server.comp_queue
            ],
        )

    def observe(self, task: Task) -> MdpState:
        """State at this task's arrival instant, before it is submitted."""
        # running sums can carry ~1e-8-bit float residue after queues drain
        return MdpState(
            weight=task.weight,
            size_bits=task.size_bits,
            free_cycles=tuple(s.free_cycles for s in self.servers),
            queued_cycles=tuple(max(s.queued_cycles, 0.0) for s in self.servers),
            comm_wait_s=tuple(max(s.comm_bits, 0.0) / s.config.link_bps for s in self.servers),
        )

    # -- actions -------------------------------------------------------------

    def submit(self, task: Task, action: Action) -> None:
        """Enqueue the task on the chosen server's communication queue."""
        if not 0 <= action.server < len(self.servers):
            raise InvalidActionError(
                f"task {task.id}: server {action.server} out of range [0, {len(self.servers)})"
            )
        server = self.servers[action.server]
        alloc = float(action.alloc_cycles_per_s)
        if alloc not in self._block_set:
            raise InvalidActionError(
                f"task {task.id}: allocation {alloc} is not a configured resource block"
            )
        if alloc > server.config.capacity_cycles_per_s:
            raise InvalidActionError(
                f"task {task.id}: allocation {alloc} exceeds capacity of server {action.server}"
            )
        if task.id in self._records:
            raise SimulationError(f"task {task.id} submitted twice")

        task.alloc_cycles_per_s = alloc
        self._tasks[task.id] = task
        self._records[task.id] = TaskRecord(
            task_id=task.id,
            weight=task.weight,
            size_bits=task.size_bits,
            server=action.server,
            alloc_cycles_per_s=alloc,
            arrival=task.arrival_time,
        )
        self._decision_order.append(task.id)
        server.comm_queue.append(task.id)
        server.comm_bits += task.size_bits
        if server.transferring is None:
            # direct submits may precede any event processing; a transfer can
            # never start before the task exists
            self._start_transfer(action.server, max(self.clock, task.arrival_time))

    def schedule_arrival(self, task: Task) -> None:
        if task.arrival_time < self.clock:
            raise SimulationError(f"task {task.id} arrives in the past")
        self._tasks[task.id] = task
        heapq.heappush(self._heap, (task.arrival_time, int(EventKind.ARRIVAL), task.id))

    # -- event machinery -----------------------------------------------------

    def _start_transfer(self, server_id: int, now: float) -> None:
        server = self.servers[server_id]
        task_id = server.comm_queue.popleft()
        server.transferring = task_id
        task = self._tasks[task_id]
        rec = self._records[task_id]
        rec.transfer_start = now
        done = now + task.size_bits / server.config.link_bps
        heapq.heappush(self._heap, (done, int(EventKind.TRANSFER_COMPLETE), task_id))

    def _start_ready_executions(self, server_id: int, now: float) -> None:
        server = self.servers[server_id]
        queue = server.comp_queue
        while queue:
            head_id = queue[0]
            alloc = self._tasks[head_id].alloc_cycles_per_s
            if alloc > server.free_cycles + 1e-9:
                break  # head-of-line blocking
            queue.popleft()
            task = self._tasks[head_id]
            server.free_cycles -= alloc
            server.queued_cycles -= self.params.mu_cycles_per_bit * task.size_bits
            server.running[head_id] = alloc
            rec = self._records[head_id]
            rec.exec_start = now
            done = now + self.params.mu_cycles_per_bit * task.size_bits / alloc
            heapq.heappush(self._heap, (done, int(EventKind.EXECUTION_COMPLETE), head_id))

    def step(self) -> Event | None:
        """Pop and apply the earliest event; None if the queue is empty."""
        if not self._heap:
            return None
        time, kind_int, task_id = heapq.heappop(self._heap)
        self.clock = time
        kind = EventKind(kind_int)
        task = self._tasks[task_id]

        if kind == EventKind.ARRIVAL:
            if self._policy is None:
                raise SimulationError("arrival event with no policy bound; use run()")
            state = self.observe(task)
            action = self._policy.decide(state)
            self.submit(task, action)
            rec = self._records[task_id]
            rec.state = state
            rec.action = action
            server_id = action.server
        elif kind == EventKind.TRANSFER_COMPLETE:
            rec = self._records[task_id]
            server_id = rec.server
            server = self.servers[server_id]
            rec.transfer_end = time
            server.transferring = None
            server.comm_bits -= task.size_bits
            if server.comm_queue:
                self._start_transfer(server_id, time)
            heapq.heappush(
                self._heap, (time + server.e2e_s, int(EventKind.COMPUTE_ARRIVAL), task_id)
            )
        elif kind == EventKind.COMPUTE_ARRIVAL:
            rec = self._records[task_id]
            server_id = rec.server
            server = self.servers[server_id]
            rec.server_arrival = time
            server.comp_queue.append(task_id)
            server.queued_cycles += self.params.mu_cycles_per_bit * task.size_bits
            self._start_ready_executions(server_id, time)
        else:  # EXECUTION_COMPLETE
            rec = self._records[task_id]
            server_id = rec.server
            server = self.servers[server_id]
            rec.completion = time
            server.free_cycles += server.running.pop(task_id)
            self._start_ready_executions(server_id, time)

        event = Event(time=time, kind=kind, task_id=task_id, server_id=server_id)
        if self.on_event is not None:
            self.on_event(event)
        return event

    # -- top-level driver ----------------------------------------------------

    def run(self, policy: Policy, tasks: list[Task]) -> list[TaskRecord]:
        """Simulate the full task list to completion under one policy.

        Returns one record per task, in decision (arrival) order. The
        simulator must be freshly reset; an invalid policy action aborts
        with diagnostics.
        """
        self._policy = policy
        for task in tasks:
            self.schedule_arrival(task)
        while self.step() is not None:
            pass
        self._policy = None
        records = [self._records[tid] for tid in self._decision_order]
        for rec in records:
            if rec.completion < 0:
                raise SimulationError(f"task {rec.task_id} never completed")
        return records


class TraceWriter:
    """Optional newline-delimited event trace (one JSON object per event)."""

    def __init__(self, path):
        self._fh = open(path, "w")

    def __call__(self, event: Event) -> None:
        self._fh.write(
            json.dumps(
                {
                    "time_s": event.time,
                    "kind": _KIND_NAMES[event.kind],
                    "task_id": event.task_id,
                    "server_id": event.server_id,
                },
                separators=(",", ":"),
            )
            + "\n"
        )

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
