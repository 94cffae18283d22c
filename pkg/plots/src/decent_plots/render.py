"""Render experiment CSV tables to figure files.

Four figure kinds cover the evaluation outputs: `curve` (learning curves,
one line per replica), `compare` (per-task weighted response, one line per
policy), `sweep` (mean weighted response against a swept parameter, one
line per policy) and `bars` (per-priority-class delay components). The
renderer only ever reads the documented CSV schema; inputs are never
modified and a rerun produces the same image.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

KINDS = ("curve", "compare", "sweep", "bars")

# accepted x-axis columns for sweep figures, with axis labels
SWEEP_AXES = {
    "lambda_per_s": "arrival rate (tasks/s)",
    "mu_cycles_per_bit": "computation intensity (cycles/bit)",
    "alpha_s_per_km": "propagation coefficient (s/km)",
}


class PlotInputError(ValueError):
    """Malformed input table (missing columns, empty data, bad numbers)."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: Path
    out_path: Path
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise PlotInputError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def _read_table(path: Path, required: list[str]) -> list[dict[str, str]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [col for col in required if col not in header]
            if missing:
                raise PlotInputError(f"{path}: missing required column(s): {', '.join(missing)}")
            rows = list(reader)
    except OSError as exc:
        raise PlotInputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise PlotInputError(f"{path}: no data rows")
    return rows


def _floats(rows: list[dict[str, str]], column: str) -> list[float]:
    try:
        return [float(row[column]) for row in rows]
    except (TypeError, ValueError) as exc:
        raise PlotInputError(f"non-numeric value in column {column!r}: {exc}") from exc


def _series_keys(rows: list[dict[str, str]], column: str) -> list[str]:
    seen: list[str] = []
    for row in rows:
        if row[column] not in seen:
            seen.append(row[column])
    return seen


def _render_curve(rows, ax) -> None:
    for replica in _series_keys(rows, "replica"):
        sub = [r for r in rows if r["replica"] == replica]
        ax.plot(_floats(sub, "episode"), _floats(sub, "mean_reward"), label=f"replica {replica}")
    ax.set_xlabel("episode")
    ax.set_ylabel("mean episode reward")
    ax.legend(fontsize=8)


def _render_compare(rows, ax) -> None:
    replicas = _series_keys(rows, "replica")
    first = replicas[0]
    for policy in _series_keys(rows, "policy"):
        sub = [r for r in rows if r["policy"] == policy and r["replica"] == first]
        ax.plot(
            _floats(sub, "task_index"),
            _floats(sub, "weighted_response_s"),
            label=policy,
            linewidth=0.8,
        )
    ax.set_xlabel("task")
    ax.set_ylabel("weighted response time (s)")
    ax.set_yscale("log")
    ax.legend()


def _render_sweep(rows, ax) -> None:
    axis = next((col for col in SWEEP_AXES if col in rows[0]), None)
    if axis is None:
        raise PlotInputError(
            "missing required column(s): one of " + ", ".join(SWEEP_AXES)
        )
    for policy in _series_keys(rows, "policy"):
        sub = [r for r in rows if r["policy"] == policy]
        ax.plot(_floats(sub, axis), _floats(sub, "mean_weighted_response_s"), marker="o", label=policy)
    ax.set_xlabel(SWEEP_AXES[axis])
    ax.set_ylabel("mean weighted response time (s)")
    ax.legend()


def _render_bars(rows, ax) -> None:
    policies = _series_keys(rows, "policy")
    policy = "decent" if "decent" in policies else policies[0]
    sub = [r for r in rows if r["policy"] == policy]
    lambdas = _series_keys(sub, "lambda_per_s")
    sub = [r for r in sub if r["lambda_per_s"] == lambdas[0]]
    weights = _floats(sub, "weight")
    net = _floats(sub, "mean_net_delay_s")
    comp = _floats(sub, "mean_comp_delay_s")
    xs = range(len(weights))
    width = 0.38
    ax.bar([x - width / 2 for x in xs], net, width, label="network delay")
    ax.bar([x + width / 2 for x in xs], comp, width, label="computing delay")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([f"{w:g}" for w in weights])
    ax.set_xlabel("task weight class")
    ax.set_ylabel("mean delay (s)")
    ax.set_title(f"policy: {policy}", fontsize=9)
    ax.legend()


_REQUIRED = {
    "curve": ["replica", "episode", "mean_reward"],
    "compare": ["policy", "replica", "task_index", "weighted_response_s"],
    "sweep": ["policy", "mean_weighted_response_s"],
    "bars": ["policy", "lambda_per_s", "weight", "mean_net_delay_s", "mean_comp_delay_s"],
}

_RENDERERS = {
    "curve": _render_curve,
    "compare": _render_compare,
    "sweep": _render_sweep,
    "bars": _render_bars,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the output path."""
    rows = _read_table(spec.csv_path, _REQUIRED[spec.kind])
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=150)
    try:
        _RENDERERS[spec.kind](rows, ax)
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        spec.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out_path)
    finally:
        plt.close(fig)
    return spec.out_path
