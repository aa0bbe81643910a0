"""Render figures from the experiment CSV logs.

Four figure kinds, one per CSV schema: the exploitability curve over solver
iterations, per-index mean-field marginal lines over time (plain and with a
regime-switch marker for adaptive runs), and the empirical-vs-limit deviation
with its confidence interval over node counts.

Rendering is a pure function of file content and spec: figures use a fixed
style, and PNG metadata that would differ between runs is suppressed, so the
same inputs produce identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("exploitability-curve", "meanfield-heatlines", "convergence-ci",
         "adaptive-heatlines")

DEFAULT_ALPHAS = (0.1, 0.3, 0.5, 0.7, 0.9)

SWITCH_MARKER_GID = "regime-switch"


class SchemaError(Exception):
    """Raised when an input CSV does not match its documented schema."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input CSV, figure kind, output path, styling."""

    kind: str
    input_path: Path
    output_path: Path
    alphas: tuple = DEFAULT_ALPHAS
    log_y: bool = False
    title: str = ""
    dpi: int = 120

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; known: {', '.join(KINDS)}")
        object.__setattr__(self, "input_path", Path(self.input_path))
        object.__setattr__(self, "output_path", Path(self.output_path))
        object.__setattr__(self, "alphas", tuple(self.alphas))


def read_columns(path: Path, required: tuple[str, ...]) -> dict[str, list[str]]:
    """Load a CSV into per-column lists, insisting on the required columns."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file {path} not found")
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path} is empty")
        missing = [column for column in required if column not in header]
        if missing:
            raise SchemaError(f"{path} is missing required column(s) "
                              + ", ".join(repr(c) for c in missing))
        idx = {column: header.index(column) for column in required}
        data: dict[str, list[str]] = {column: [] for column in required}
        for row in reader:
            for column in required:
                data[column].append(row[idx[column]])
    if not data[required[0]]:
        raise SchemaError(f"{path} has a header but no data rows")
    return data


def _new_figure(spec, n_axes=1):
    fig, axes = plt.subplots(1, n_axes, figsize=(4.0 * n_axes, 3.2), squeeze=False,
                             constrained_layout=True)
    if spec.title:
        fig.suptitle(spec.title)
    return fig, axes[0]


def _render_exploitability(spec):
    data = read_columns(spec.input_path, ("iteration", "exploitability"))
    iterations = np.array([int(v) for v in data["iteration"]])
    values = np.array([float(v) for v in data["exploitability"]])
    fig, (ax,) = _new_figure(spec)
    ax.plot(iterations, values, marker=".", markersize=3)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("exploitability")
    return fig


def _nearest_alphas(available, wanted):
    available = np.asarray(sorted(available))
    chosen = []
    for target in wanted:
        value = float(available[np.abs(available - target).argmin()])
        if value not in chosen:
            chosen.append(value)
    return chosen


def _render_meanfield(spec, mark_switch):
    data = read_columns(spec.input_path, ("t", "alpha", "state", "probability"))
    ts = np.array([int(v) for v in data["t"]])
    alphas = np.array([float(v) for v in data["alpha"]])
    states = data["state"]
    probs = np.array([float(v) for v in data["probability"]])

    state_names = sorted(set(states), key=states.index)
    chosen = _nearest_alphas(set(alphas), spec.alphas)
    times = np.unique(ts)

    fig, axes = _new_figure(spec, n_axes=len(state_names))
    lookup = {}
    for t, alpha, state, p in zip(ts, alphas, states, probs):
        lookup[(t, alpha, state)] = p
    for ax, state in zip(axes, state_names):
        for alpha in chosen:
            series = [lookup[(t, alpha, state)] for t in times]
            ax.plot(times, series, label=f"alpha={alpha:g}")
        if mark_switch:
            marker = ax.axvline(times.max() / 2.0, color="gray", linestyle="--",
                                linewidth=1.0)
            marker.set_gid(SWITCH_MARKER_GID)
        ax.set_title(f"state {state}")
        ax.set_xlabel("t")
        ax.set_ylim(-0.02, 1.02)
    axes[0].set_ylabel("probability")
    axes[-1].legend(fontsize=7)
    return fig


def _render_convergence(spec):
    data = read_columns(spec.input_path, ("N", "delta_mu_mean", "ci_low", "ci_high"))
    n = np.array([int(v) for v in data["N"]])
    mean = np.array([float(v) for v in data["delta_mu_mean"]])
    low = np.array([float(v) for v in data["ci_low"]])
    high = np.array([float(v) for v in data["ci_high"]])
    fig, (ax,) = _new_figure(spec)
    ax.errorbar(n, mean, yerr=(mean - low, high - mean), fmt="o-", capsize=4)
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("mean-field deviation")
    return fig


def render(spec: FigureSpec):
    """Render one figure and write it to spec.output_path; returns the figure.

    The PNG software tag is suppressed so rerendering identical inputs gives
    identical bytes.
    """
    if spec.kind == "exploitability-curve":
        fig = _render_exploitability(spec)
    elif spec.kind == "meanfield-heatlines":
        fig = _render_meanfield(spec, mark_switch=False)
    elif spec.kind == "adaptive-heatlines":
        fig = _render_meanfield(spec, mark_switch=True)
    else:
        fig = _render_convergence(spec)
    spec.output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output_path, dpi=spec.dpi, metadata={"Software": None})
    return fig
