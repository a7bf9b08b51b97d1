"""Figures from solver CSV output: log-log convergence plots with fitted
slopes, entropy decay curves, and conservation-residual traces.

Inputs are the documented CSV schemas and are never modified; rerunning on
identical input produces identical slope sidecars.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SWEEP_HEADER = ["eps", "t", "H_over_eps2", "half_g2", "entropic_metric",
                "l1_gap", "q_gap", "mass_res", "energy_res", "entropy_slack"]
ENTROPY_HEADER = ["t", "H", "R", "int_R", "entropy_slack"]
RESIDUAL_HEADER = ["t", "mass_law_res", "momentum_law_res", "energy_law_res",
                   "mass_drift", "energy_drift"]

FIGURE_KINDS = ("convergence_loglog", "entropy_decay", "residual_trace")

SLOPE_FLOOR = 1e-12  # quadrature-noise floor excluded from slope fits


class SchemaError(ValueError):
    """CSV header does not match the documented harness schema."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str | Path
    kind: str
    output_image: str | Path
    snapshot_filter: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"choose one of {FIGURE_KINDS}")


def read_table(path: str | Path, expected_header: list[str]) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or rows[0] != expected_header:
        raise SchemaError(
            f"{path}: header {rows[0] if rows else '<empty>'} does not match "
            f"the expected schema {expected_header}")
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    if data.size == 0:
        raise SchemaError(f"{path}: no data rows")
    return {name: data[:, i] for i, name in enumerate(expected_header)}


def fit_loglog_slope(eps: np.ndarray, values: np.ndarray) -> float | None:
    """Least-squares slope of log(values) against log(eps); None when fewer
    than two points survive the noise floor."""
    mask = values > SLOPE_FLOOR
    if np.unique(eps[mask]).size < 2:
        return None
    return float(np.polyfit(np.log(eps[mask]), np.log(values[mask]), 1)[0])


def _sidecar_path(output_image: str | Path) -> Path:
    out = Path(output_image)
    return out.with_suffix(out.suffix + ".slopes.txt")


def _plot_convergence(spec: FigureSpec) -> list[str]:
    table = read_table(spec.input_csv, SWEEP_HEADER)
    times = np.unique(table["t"])
    if spec.snapshot_filter is not None:
        wanted = np.asarray(spec.snapshot_filter)
        times = np.array([t for t in times
                          if np.any(np.isclose(t, wanted, rtol=0, atol=1e-12))])
        if times.size == 0:
            raise ValueError("snapshot filter removed every row")
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    lines: list[str] = []
    for metric_name, ax in zip(("entropic_metric", "l1_gap"), axes):
        for t in times:
            sel = np.isclose(table["t"], t)
            eps = table["eps"][sel]
            vals = table[metric_name][sel]
            order = np.argsort(eps)
            slope = fit_loglog_slope(eps, vals)
            label = f"t={t:g}"
            if slope is not None:
                label += f" (slope {slope:.2f})"
                lines.append(f"t={t:g} {metric_name} slope {slope:.6f}")
            else:
                lines.append(f"t={t:g} {metric_name} slope not_fitted")
            ax.loglog(eps[order], vals[order], "o-", label=label)
        ax.set_xlabel("eps")
        ax.set_ylabel(metric_name)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    axes[0].set_title("entropic metric vs eps")
    axes[1].set_title("L1 gap vs eps")
    fig.tight_layout()
    fig.savefig(spec.output_image, dpi=130)
    plt.close(fig)
    return lines


def _plot_entropy_decay(spec: FigureSpec) -> list[str]:
    table = read_table(spec.input_csv, ENTROPY_HEADER)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(table["t"], table["H"], "o-", color="tab:blue", label="H(t)")
    ax.set_xlabel("t")
    ax.set_ylabel("H", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(table["t"], table["R"], "s--", color="tab:red", label="R(t)")
    ax2.set_ylabel("R", color="tab:red")
    ax.set_title("entropy decay and dissipation rate")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.output_image, dpi=130)
    plt.close(fig)
    monotone = bool(np.all(np.diff(table["H"]) <= 1e-12 * max(table["H"][0], 1e-300)))
    return [f"H monotone_nonincreasing {monotone}"]


def _plot_residual_trace(spec: FigureSpec) -> list[str]:
    table = read_table(spec.input_csv, RESIDUAL_HEADER)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name in ("mass_law_res", "momentum_law_res", "energy_law_res",
                 "mass_drift", "energy_drift"):
        vals = np.maximum(table[name], 1e-18)  # log scale guard
        ax.semilogy(table["t"], vals, "o-", label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("residual")
    ax.set_title("conservation residual traces")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_image, dpi=130)
    plt.close(fig)
    return [f"max_{name} {table[name].max():.6e}"
            for name in ("mass_law_res", "momentum_law_res", "energy_law_res")]


def plot(spec: FigureSpec) -> Path:
    """Render the figure and write the slope/summary sidecar next to it.

    Returns the sidecar path.
    """
    Path(spec.output_image).parent.mkdir(parents=True, exist_ok=True)
    if spec.kind == "convergence_loglog":
        lines = _plot_convergence(spec)
    elif spec.kind == "entropy_decay":
        lines = _plot_entropy_decay(spec)
    else:
        lines = _plot_residual_trace(spec)
    sidecar = _sidecar_path(spec.output_image)
    sidecar.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return sidecar
