"""Entropy functionals, fluctuation algebra, and the entropic-convergence
metrics used by the epsilon-sweep experiment.

Conventions: the pointwise entropy density is h(z) = (1+z) log(1+z) - z and
the dissipation density is r(z) = z log(1+z); both are convex, vanish
quadratically at z = 0, and h extends continuously to z = -1 with value 1,
which is the convention applied to relative densities sitting at the
positivity floor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collision import CollisionTable, dissipation_rate_v
from .solver import PhaseGrid, Trajectory
from .velocity_space import VelocityGrid


def entropy_h(z: np.ndarray | float) -> np.ndarray | float:
    """h(z) = (1+z) log(1+z) - z for z >= -1 (h(-1) = 1 by continuity)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < -1.0):
        raise ValueError("entropy_h requires z >= -1")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(z > -1.0, (1.0 + z) * np.log1p(np.maximum(z, -1.0 + 1e-300)) - z, 1.0)
    return float(out) if out.ndim == 0 else out


def dissipation_r(z: np.ndarray | float) -> np.ndarray | float:
    """r(z) = z log(1+z) for z > -1; nonnegative by convexity."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= -1.0):
        raise ValueError("dissipation_r requires z > -1")
    out = z * np.log1p(z)
    return float(out) if out.ndim == 0 else out


def fluctuation(G: np.ndarray, eps: float) -> np.ndarray:
    """g such that G = 1 + eps g."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return (np.asarray(G, dtype=float) - 1.0) / eps


def density_from_fluctuation(g: np.ndarray, eps: float) -> np.ndarray:
    if eps <= 0:
        raise ValueError("eps must be positive")
    return 1.0 + eps * np.asarray(g, dtype=float)


def normalization(g: np.ndarray, eps: float) -> np.ndarray:
    """N = 1 + eps g / 3, the normalizing factor that tends to 1 with eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return 1.0 + (eps / 3.0) * np.asarray(g, dtype=float)


def renormalized_fluctuation(g: np.ndarray, eps: float) -> np.ndarray:
    """(3/eps) log(1 + eps g / 3); satisfies the pointwise bound
    renormalized^2 <= g^2 / N elementwise."""
    arg = normalization(g, eps)
    if np.any(arg <= 0.0):
        raise ValueError("renormalized fluctuation needs 1 + eps g / 3 > 0")
    return (3.0 / eps) * np.log(arg)


def _cellwise(values: np.ndarray, grid: VelocityGrid) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    if values.shape[-1] != grid.size:
        raise ValueError(f"values must have {grid.size} velocity entries per cell")
    return values


def entropy_H(grid: VelocityGrid, G: np.ndarray, phase: PhaseGrid | None = None) -> float:
    """Relative entropy int <G log G - G + 1> dx; zero iff G is identically 1."""
    cells = _cellwise(G, grid)
    if np.any(cells < 0.0):
        raise ValueError("entropy_H requires G >= 0")
    per_cell = entropy_h(cells - 1.0) @ grid.maxwellian_weights
    if phase is not None:
        return phase.x_integral(per_cell)
    return float(per_cell.mean())


def half_quadratic(grid: VelocityGrid, g: np.ndarray, phase: PhaseGrid | None = None) -> float:
    """(1/2) int <g^2> dx, the limiting quadratic entropy."""
    cells = _cellwise(g, grid)
    per_cell = 0.5 * (cells**2 @ grid.maxwellian_weights)
    if phase is not None:
        return phase.x_integral(per_cell)
    return float(per_cell.mean())


def dissipation_R(table: CollisionTable, G: np.ndarray,
                  phase: PhaseGrid | None = None) -> float:
    """Entropy dissipation rate int (1/4) <<(G'G'* - GG*) log(G'G'*/GG*)>> dx."""
    grid = table.grid
    cells = _cellwise(G, grid)
    per_cell = np.array([dissipation_rate_v(table, cells[cx]) for cx in range(cells.shape[0])])
    if phase is not None:
        return phase.x_integral(per_cell)
    return float(per_cell.mean())


@dataclass(frozen=True)
class EntropicGap:
    """Distance of a scaled density from a reference fluctuation: the entropic
    metric |H/eps^2 - (1/2) int <g_ref^2>| and the L1(M dv dx) gap."""

    metric: float
    l1_gap: float


def entropic_metric(grid: VelocityGrid, G_eps: np.ndarray, eps: float,
                    g_ref: np.ndarray, phase: PhaseGrid | None = None) -> EntropicGap:
    if eps <= 0:
        raise ValueError("eps must be positive")
    H = entropy_H(grid, G_eps, phase)
    target = half_quadratic(grid, g_ref, phase)
    g_eps = fluctuation(_cellwise(G_eps, grid), eps)
    diff = np.abs(g_eps - _cellwise(g_ref, grid)) @ grid.maxwellian_weights
    l1 = phase.x_integral(diff) if phase is not None else float(diff.mean())
    return EntropicGap(metric=abs(H / eps**2 - target), l1_gap=l1)


def clipped_initial_fluctuation(g_in: np.ndarray, eps: float) -> np.ndarray:
    """max(g_in, -1/eps): the standard construction keeping 1 + eps g >= 0."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.maximum(np.asarray(g_in, dtype=float), -1.0 / eps)


def dissipation_equality_residual(trajectory: Trajectory) -> float:
    """Defect of the linearized energy balance
    (1/2) int <g^2(t)> dx + int_0^t (1/4) <<q^2>> dx ds = (1/2) int <g_in^2> dx
    with the time integral taken by the trapezoid rule on the per-step records."""
    if trajectory.kind != "fluctuation":
        raise ValueError("dissipation_equality_residual expects a linearized trajectory")
    if trajectory.q2_dissipation is None:
        raise ValueError("trajectory was run without q2 tracking")
    times = trajectory.step_times
    if times.size < 2:
        raise ValueError("need at least two step boundaries")
    e = trajectory.quadratic_energy
    d = trajectory.q2_dissipation
    integral = float(np.trapezoid(d, times))
    return abs(e[-1] + integral - e[0])


@dataclass(frozen=True)
class EntropyReport:
    """Per-time entropy diagnostics row for a nonlinear run at one epsilon."""

    time: float
    H: float
    R: float
    H_over_eps2: float
    half_g2: float
    entropy_inequality_slack: float
    dissipation_equality_residual: float
    C_in: float

    def validate(self, slack_tolerance: float) -> None:
        if self.H < 0 or self.R < 0:
            raise ValueError("entropy and dissipation rate must be nonnegative")
        if self.entropy_inequality_slack < -slack_tolerance:
            raise ValueError(
                f"entropy inequality violated beyond tolerance: "
                f"slack = {self.entropy_inequality_slack:.3e}"
            )
