"""Configuration and sweep drivers for the evaluation experiments.

Every experiment consumes one explicit YAML config (all constants carry
their units in the key names), writes CSV tables with fixed headers plus a
JSON summary carrying the config hash and seeds, and is byte-for-byte
reproducible from the same config and seeds. Within a comparison, every
policy consumes the identical generated task stream.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .agent import (
    ActorPolicy,
    AgentConfig,
    EvalStats,
    OffloadEnv,
    Trainer,
    evaluate,
    write_training_log,
)
from .baselines import LargestServerPolicy, NearestServerPolicy
from .mdp import NormalizationConfig
from .model import DelayParams, ServerConfig
from .neural import Mlp
from .sim import WorkloadConfig, generate_arrivals


class ConfigError(ValueError):
    pass


DEFAULT_BLOCKS = [1e7, 2e7, 4e7, 6e7, 8e7, 1e8, 1.2e8, 1.4e8, 1.6e8, 2e8]
DEFAULT_SWEEPS = {
    "lambda": [30.0, 40.0, 50.0, 60.0, 70.0],
    "mu": [0.05, 0.10, 0.15, 0.20, 0.25],
    "alpha": [0.01, 0.02, 0.03, 0.04, 0.05],
}
POLICIES = ("decent", "nearest", "largest")

# fixed stream tags so every RNG in an experiment derives from (tag, seed, point)
_EVAL_TASKS_TAG = 101
_EVAL_ACTION_TAG = 102


@dataclass(slots=True)
class FleetConfig:
    """Distances and (shared) capacity/link rate of the edge servers."""

    distances_km: list[float] = field(default_factory=lambda: [0.0, 1.0, 2.0, 3.0])
    capacity_cycles_per_s: float = 2.0e8
    link_bps: float = 2.0e9

    def server_configs(self) -> list[ServerConfig]:
        return [
            ServerConfig(
                id=k,
                capacity_cycles_per_s=self.capacity_cycles_per_s,
                distance_km=d,
                link_bps=self.link_bps,
            )
            for k, d in enumerate(self.distances_km)
        ]


@dataclass(slots=True)
class SweepConfig:
    axis: str = "none"  # none | lambda | mu | alpha
    values: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.axis not in ("none", "lambda", "mu", "alpha"):
            raise ConfigError(f"unknown sweep axis {self.axis!r}")

    def points(self) -> list[float]:
        if self.axis == "none":
            return []
        return list(self.values) if self.values else list(DEFAULT_SWEEPS[self.axis])


@dataclass(slots=True)
class ExperimentConfig:
    fleet: FleetConfig = field(default_factory=FleetConfig)
    delay: DelayParams = field(
        default_factory=lambda: DelayParams(alpha_s_per_km=0.03, zeta_s=0.03, mu_cycles_per_bit=0.15)
    )
    resource_blocks_cycles_per_s: list[float] = field(default_factory=lambda: list(DEFAULT_BLOCKS))
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    agent: AgentConfig = field(default_factory=lambda: AgentConfig(optimizer="adam"))
    sweep: SweepConfig = field(default_factory=SweepConfig)
    eval_tasks: int = 6400
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    retrain_per_point: bool = False

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["workload"]["weight_set"] = list(self.workload.weight_set)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        try:
            fleet = FleetConfig(**data.pop("fleet", {}))
            delay = DelayParams(**data.pop("delay", {}))
            workload_raw = dict(data.pop("workload", {}))
            if "weight_set" in workload_raw:
                workload_raw["weight_set"] = tuple(workload_raw["weight_set"])
            workload = WorkloadConfig(**workload_raw)
            agent = AgentConfig(**data.pop("agent", {}))
            sweep = SweepConfig(**data.pop("sweep", {}))
            return cls(
                fleet=fleet,
                delay=delay,
                workload=workload,
                agent=agent,
                sweep=sweep,
                **data,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh)
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} is not a mapping")
        return cls.from_dict(data)

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def env(
        self,
        arrival_rate_per_s: float | None = None,
        mu_cycles_per_bit: float | None = None,
        alpha_s_per_km: float | None = None,
    ) -> OffloadEnv:
        """Build a simulation environment, optionally overriding one sweep axis.

        Feature scales never depend on the swept parameters, so a policy
        trained at the defaults sees consistent features at every point.
        """
        workload = dataclasses.replace(self.workload)
        if arrival_rate_per_s is not None:
            workload.arrival_rate_per_s = arrival_rate_per_s
        delay = self.delay
        if mu_cycles_per_bit is not None or alpha_s_per_km is not None:
            delay = DelayParams(
                alpha_s_per_km=alpha_s_per_km if alpha_s_per_km is not None else delay.alpha_s_per_km,
                zeta_s=delay.zeta_s,
                mu_cycles_per_bit=(
                    mu_cycles_per_bit if mu_cycles_per_bit is not None else delay.mu_cycles_per_bit
                ),
            )
        norms = NormalizationConfig(
            weight_scale=max(self.workload.weight_set),
            size_scale=self.workload.size_mean_bits,
            cycles_scale=self.fleet.capacity_cycles_per_s,
        )
        return OffloadEnv(
            servers=self.fleet.server_configs(),
            params=delay,
            blocks_cycles_per_s=self.resource_blocks_cycles_per_s,
            workload=workload,
            norms=norms,
        )


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_summary(path: Path, cfg: ExperimentConfig, extra: dict) -> None:
    payload = {"config_hash": cfg.config_hash(), "seeds": list(cfg.seeds)}
    payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _point_rng(tag: int, seed: int, point_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([tag, seed, point_index]))


class ExperimentRunner:
    """Trains and evaluates policies for one config, caching trained actors."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._actors: dict[tuple, tuple[Mlp, list]] = {}

    # -- training ------------------------------------------------------------

    def trained_actor(self, seed: int, point_key: tuple = ()) -> tuple[Mlp, list]:
        """Actor trained at the given seed (and sweep point when retraining)."""
        key = (seed, *point_key)
        if key not in self._actors:
            overrides = dict(point_key)
            env = self.cfg.env(**overrides)
            agent_cfg = dataclasses.replace(self.cfg.agent, seed=seed)
            result = Trainer(env, agent_cfg).train()
            self._actors[key] = (result.actor, result.stats)
        return self._actors[key]

    def _actor_for_point(self, seed: int, axis: str, value: float) -> Mlp:
        if self.cfg.retrain_per_point and axis != "none":
            param = {
                "lambda": "arrival_rate_per_s",
                "mu": "mu_cycles_per_bit",
                "alpha": "alpha_s_per_km",
            }[axis]
            return self.trained_actor(seed, ((param, value),))[0]
        return self.trained_actor(seed)[0]

    # -- evaluation ----------------------------------------------------------

    def _eval_point(
        self, seed: int, point_index: int, axis: str, value: float | None
    ) -> dict[str, EvalStats]:
        """Evaluate all policies on one identical task stream."""
        overrides = {}
        if axis == "lambda" and value is not None:
            overrides["arrival_rate_per_s"] = value
        elif axis == "mu" and value is not None:
            overrides["mu_cycles_per_bit"] = value
        elif axis == "alpha" and value is not None:
            overrides["alpha_s_per_km"] = value
        env = self.cfg.env(**overrides)
        tasks = generate_arrivals(
            env.workload, self.cfg.eval_tasks, rng=_point_rng(_EVAL_TASKS_TAG, seed, point_index)
        )
        actor = self._actor_for_point(seed, axis, value if value is not None else 0.0)
        scale = self.cfg.agent.reward_scale
        policies = {
            "decent": ActorPolicy(
                actor,
                env.action_space,
                env.norms,
                epsilon=0.0,
                rng=_point_rng(_EVAL_ACTION_TAG, seed, point_index),
            ),
            "nearest": NearestServerPolicy(env.servers, env.params, env.blocks),
            "largest": LargestServerPolicy(env.blocks),
        }
        return {name: evaluate(env, pol, tasks, reward_scale=scale) for name, pol in policies.items()}


def run_training(cfg: ExperimentConfig, out_dir) -> Path:
    """Train one replica per seed and emit the learning-curve table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = ExperimentRunner(cfg)
    rows = []
    finals = {}
    for seed in cfg.seeds:
        _, stats = runner.trained_actor(seed)
        write_training_log(out / f"training_r{seed}.log", stats, cfg.agent.epsilon)
        for s in stats:
            rows.append((seed, s.episode, s.mean_reward, s.mean_weighted_response_s))
        tail = stats[-min(50, len(stats)) :]
        finals[str(seed)] = sum(s.mean_reward for s in tail) / len(tail) if tail else 0.0
    path = out / "learning_curve.csv"
    _write_csv(path, ["replica", "episode", "mean_reward", "mean_weighted_response_s"], rows)
    _write_summary(
        out / "learning_curve.summary.json",
        cfg,
        {"experiment": "train", "final_mean_reward_by_replica": finals},
    )
    return path


def _lambda_points(cfg: ExperimentConfig) -> list[float]:
    if cfg.sweep.axis == "lambda":
        return cfg.sweep.points()
    return [cfg.workload.arrival_rate_per_s]


def run_comparison(cfg: ExperimentConfig, out_dir) -> Path:
    """Evaluate all policies on shared streams; per-task and summary tables."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = ExperimentRunner(cfg)
    points = _lambda_points(cfg)
    base_lambda = cfg.workload.arrival_rate_per_s

    task_rows = []
    replica_rows = []
    summary_rows = []
    aggregates: dict[str, dict[str, float]] = {}
    for pi, lam in enumerate(points):
        per_policy: dict[str, list[float]] = {p: [] for p in POLICIES}
        per_policy_resp: dict[str, list[float]] = {p: [] for p in POLICIES}
        for seed in cfg.seeds:
            stats = runner._eval_point(seed, pi, "lambda", lam)
            for policy in POLICIES:
                st = stats[policy]
                per_policy[policy].append(st.mean_weighted_response_s)
                per_policy_resp[policy].append(st.mean_response_s)
                replica_rows.append(
                    (policy, lam, seed, st.mean_weighted_response_s, st.mean_response_s)
                )
                if lam == base_lambda:
                    scale = cfg.agent.reward_scale
                    for idx, rec in enumerate(st.records):
                        task_rows.append(
                            (
                                policy,
                                lam,
                                seed,
                                idx,
                                rec.weight,
                                rec.t_net,
                                rec.t_comp,
                                rec.response,
                                rec.weighted_response / scale,
                            )
                        )
        for policy in POLICIES:
            vals = np.array(per_policy[policy])
            summary_rows.append(
                (
                    policy,
                    lam,
                    float(vals.mean()),
                    float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
                    float(np.mean(per_policy_resp[policy])),
                    len(vals),
                    cfg.eval_tasks,
                )
            )
            aggregates.setdefault(policy, {})[repr(lam)] = float(vals.mean())

    _write_csv(
        out / "comparison_tasks.csv",
        [
            "policy",
            "lambda_per_s",
            "replica",
            "task_index",
            "weight",
            "t_net_s",
            "t_comp_s",
            "response_s",
            "weighted_response_s",
        ],
        task_rows,
    )
    _write_csv(
        out / "comparison_replicas.csv",
        ["policy", "lambda_per_s", "replica", "mean_weighted_response_s", "mean_response_s"],
        replica_rows,
    )
    path = out / "comparison_summary.csv"
    _write_csv(
        path,
        [
            "policy",
            "lambda_per_s",
            "mean_weighted_response_s",
            "std_weighted_response_s",
            "mean_response_s",
            "n_replicas",
            "n_tasks",
        ],
        summary_rows,
    )
    _write_summary(
        out / "comparison.summary.json",
        cfg,
        {"experiment": "compare", "mean_weighted_response_by_policy": aggregates},
    )
    return path


def run_weight_breakdown(cfg: ExperimentConfig, out_dir) -> Path:
    """Per-priority-class delay averages for every policy and lambda point."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = ExperimentRunner(cfg)
    points = _lambda_points(cfg)
    weights = sorted(cfg.workload.weight_set)

    replica_rows = []
    rows = []
    for pi, lam in enumerate(points):
        acc: dict[tuple[str, float], dict[str, float]] = {
            (p, w): {"net": 0.0, "comp": 0.0, "resp": 0.0, "wresp": 0.0, "n": 0.0}
            for p in POLICIES
            for w in weights
        }
        for seed in cfg.seeds:
            stats = runner._eval_point(seed, pi, "lambda", lam)
            for policy in POLICIES:
                for w, group in stats[policy].per_weight.items():
                    slot = acc[(policy, w)]
                    n = group["n_tasks"]
                    slot["net"] += group["mean_net_delay_s"] * n
                    slot["comp"] += group["mean_comp_delay_s"] * n
                    slot["resp"] += group["mean_response_s"] * n
                    slot["wresp"] += group["mean_weighted_response_s"] * n
                    slot["n"] += n
                    replica_rows.append(
                        (
                            policy,
                            lam,
                            seed,
                            w,
                            group["mean_net_delay_s"],
                            group["mean_comp_delay_s"],
                            group["mean_response_s"],
                            int(n),
                        )
                    )
        for policy in POLICIES:
            for w in weights:
                slot = acc[(policy, w)]
                n = slot["n"] or 1.0
                rows.append(
                    (
                        policy,
                        lam,
                        w,
                        slot["net"] / n,
                        slot["comp"] / n,
                        slot["resp"] / n,
                        slot["wresp"] / n,
                        int(slot["n"]),
                    )
                )

    path = out / "breakdown.csv"
    _write_csv(
        path,
        [
            "policy",
            "lambda_per_s",
            "weight",
            "mean_net_delay_s",
            "mean_comp_delay_s",
            "mean_response_s",
            "mean_weighted_response_s",
            "n_tasks",
        ],
        rows,
    )
    _write_csv(
        out / "breakdown_replicas.csv",
        [
            "policy",
            "lambda_per_s",
            "replica",
            "weight",
            "mean_net_delay_s",
            "mean_comp_delay_s",
            "mean_response_s",
            "n_tasks",
        ],
        replica_rows,
    )
    _write_summary(out / "breakdown.summary.json", cfg, {"experiment": "breakdown"})
    return path


def run_sensitivity(cfg: ExperimentConfig, out_dir) -> Path:
    """Sweep the computation-intensity or propagation coefficient."""
    axis = cfg.sweep.axis
    if axis not in ("mu", "alpha"):
        raise ConfigError("sensitivity sweep requires sweep.axis of 'mu' or 'alpha'")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = ExperimentRunner(cfg)
    points = cfg.sweep.points()
    column = "mu_cycles_per_bit" if axis == "mu" else "alpha_s_per_km"

    replica_rows = []
    rows = []
    aggregates: dict[str, dict[str, float]] = {}
    for pi, value in enumerate(points):
        per_policy: dict[str, list[float]] = {p: [] for p in POLICIES}
        for seed in cfg.seeds:
            stats = runner._eval_point(seed, pi, axis, value)
            for policy in POLICIES:
                st = stats[policy]
                per_policy[policy].append(st.mean_weighted_response_s)
                replica_rows.append((policy, value, seed, st.mean_weighted_response_s))
        for policy in POLICIES:
            vals = np.array(per_policy[policy])
            rows.append(
                (
                    policy,
                    value,
                    float(vals.mean()),
                    float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
                    len(vals),
                )
            )
            aggregates.setdefault(policy, {})[repr(value)] = float(vals.mean())

    path = out / f"sensitivity_{axis}.csv"
    _write_csv(
        path,
        ["policy", column, "mean_weighted_response_s", "std_weighted_response_s", "n_replicas"],
        rows,
    )
    _write_csv(
        out / f"sensitivity_{axis}_replicas.csv",
        ["policy", column, "replica", "mean_weighted_response_s"],
        replica_rows,
    )
    _write_summary(
        out / f"sensitivity_{axis}.summary.json",
        cfg,
        {"experiment": "sweep", "axis": axis, "mean_weighted_response_by_policy": aggregates},
    )
    return path
