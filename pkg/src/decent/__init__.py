"""Edge-offloading simulator and actor-critic scheduler (DECENT)."""

from .agent import (
    ActorPolicy,
    AgentConfig,
    OffloadEnv,
    Trainer,
    advantage,
    evaluate,
    evaluate_actor,
    select_action,
    train,
)
from .baselines import LargestServerPolicy, NearestServerPolicy, RandomPolicy
from .mdp import Action, ActionSpace, MdpState, NormalizationConfig, Transition, encode, reward
from .model import (
    DelayParams,
    QueueSnapshot,
    ServerConfig,
    Task,
    comm_wait,
    computing_delay,
    e2e_delay,
    exec_time,
    network_delay,
    transmission_time,
    weighted_response,
)
from .neural import Mlp, backward_policy, backward_value, forward_actor, forward_critic
from .sim import Simulator, TaskRecord, WorkloadConfig, generate_arrivals

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionSpace",
    "ActorPolicy",
    "AgentConfig",
    "DelayParams",
    "LargestServerPolicy",
    "MdpState",
    "Mlp",
    "NearestServerPolicy",
    "NormalizationConfig",
    "OffloadEnv",
    "QueueSnapshot",
    "RandomPolicy",
    "ServerConfig",
    "Simulator",
    "Task",
    "TaskRecord",
    "Trainer",
    "Transition",
    "WorkloadConfig",
    "advantage",
    "backward_policy",
    "backward_value",
    "comm_wait",
    "computing_delay",
    "e2e_delay",
    "encode",
    "evaluate",
    "evaluate_actor",
    "exec_time",
    "forward_actor",
    "forward_critic",
    "generate_arrivals",
    "network_delay",
    "reward",
    "select_action",
    "train",
    "transmission_time",
    "weighted_response",
]
