"""Strang-split time integration of the nonlinear relative-density equation
and its linearized companion on a (homogeneous or 1D-torus) x 3D-velocity
phase grid.

Substep order is half transport, half force, full collision, half force,
half transport.  The force substep traces characteristics semi-Lagrangially
(exact rotations for magnetic fields) and then restores the moments whose
substep-level evolution is known exactly: mass and kinetic energy are
invariant because div_v F = 0 and F.v = 0, and the magnetic momentum rotates
about the field axis.  The collision substep conserves all five invariant
moments through the orthogonal-projection fix; with ``entropy_consistent``
it additionally carries a rank-one correction along the invariant-free part
of log G that makes the semi-discrete entropy rate equal minus the reported
dissipation functional, so the entropy balance closes to time-integration
accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .collision import (
    CollisionTable,
    consistent_collision_rate,
    conservation_fix,
    dissipation_rate_v,
    linearized_collision,
    q_bilinear,
    q_squared_bracket,
)
from .force_field import ForceField, MagneticForce, ZeroForce, validate_force
from .velocity_space import VelocityGrid

RELATIVE_DENSITY = "relative_density"
FLUCTUATION = "fluctuation"


class AdmissibilityError(RuntimeError):
    """Force field failed an admissibility check; the solver refuses to run."""


class StabilityError(RuntimeError):
    """Configured dt exceeds a reported stability bound."""


@dataclass(frozen=True)
class PhaseGrid:
    """Velocity lattice with an optional unit-length periodic spatial axis."""

    velocity: VelocityGrid
    n_x: int = 1

    def __post_init__(self):
        if self.n_x < 1:
            raise ValueError("n_x must be >= 1")

    @property
    def spatial_mode(self) -> str:
        return "homogeneous" if self.n_x == 1 else "torus_1d"

    @property
    def dx(self) -> float:
        return 1.0 / self.n_x

    @property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.n_x) + 0.5) * self.dx

    def x_integral(self, cell_values: np.ndarray) -> float:
        """Integral over the unit torus; homogeneous mode carries weight 1."""
        return float(np.sum(cell_values)) * self.dx


@dataclass
class State:
    """Phase-space field of shape (n_x, n_velocity_nodes) at one time."""

    values: np.ndarray
    time: float
    kind: str

    def copy(self) -> "State":
        return State(values=self.values.copy(), time=self.time, kind=self.kind)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    splitting: Literal["strang"] = "strang"
    advection_scheme: Literal["spectral", "upwind2"] = "spectral"
    collision_integrator: Literal["explicit_rk2", "semi_implicit_euler", "rk4"] = "explicit_rk2"
    positivity_floor: float = 1e-30
    entropy_consistent: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.splitting != "strang":
            raise ValueError(f"unknown splitting {self.splitting!r}")
        if self.advection_scheme not in ("spectral", "upwind2"):
            raise ValueError(f"unknown advection scheme {self.advection_scheme!r}")
        if self.collision_integrator not in ("explicit_rk2", "semi_implicit_euler", "rk4"):
            raise ValueError(f"unknown collision integrator {self.collision_integrator!r}")
        if self.positivity_floor < 0:
            raise ValueError("positivity_floor must be >= 0")


def stability_limits(phase: PhaseGrid, table: CollisionTable,
                     config: SolverConfig) -> dict[str, float]:
    """Reported dt bounds: loss-rate bound for explicit collision stepping and
    the advective CFL for the upwind scheme (spectral transport is exact)."""
    limits: dict[str, float] = {}
    if config.collision_integrator in ("explicit_rk2", "rk4"):
        rate = table.collision_rate_bound()
        limits["collision"] = 2.0 / rate if rate > 0 else np.inf
    else:
        limits["collision"] = np.inf
    if phase.n_x > 1 and config.advection_scheme == "upwind2":
        vmax = float(np.abs(phase.velocity.nodes[:, 0]).max())
        limits["advection_cfl"] = phase.dx / vmax if vmax > 0 else np.inf
    else:
        limits["advection_cfl"] = np.inf
    return limits


def check_stability(phase: PhaseGrid, table: CollisionTable, config: SolverConfig) -> None:
    for name, bound in stability_limits(phase, table, config).items():
        if config.dt > bound:
            raise StabilityError(
                f"dt = {config.dt:g} exceeds the {name} bound {bound:.3e}"
            )


# ---------------------------------------------------------------------------
# transport substep (1D torus)
# ---------------------------------------------------------------------------

def _transport(values: np.ndarray, phase: PhaseGrid, tau: float,
               scheme: str) -> np.ndarray:
    if phase.n_x == 1 or tau == 0.0:
        return values
    vx = phase.velocity.nodes[:, 0]
    if scheme == "spectral":
        # Exact shift of each velocity line: multiply mode k by e^{-2 pi i k v tau}.
        modes = np.fft.rfft(values, axis=0)
        k = np.arange(modes.shape[0])
        phase_factor = np.exp(-2j * np.pi * tau * np.outer(k, vx))
        return np.fft.irfft(modes * phase_factor, n=phase.n_x, axis=0)
    # second-order upwind, two-stage explicit update
    dx = phase.dx

    def rhs(u: np.ndarray) -> np.ndarray:
        fwd = (3.0 * u - 4.0 * np.roll(u, 1, axis=0) + np.roll(u, 2, axis=0)) / (2 * dx)
        bwd = (-3.0 * u + 4.0 * np.roll(u, -1, axis=0) - np.roll(u, -2, axis=0)) / (2 * dx)
        return -vx[None, :] * np.where(vx[None, :] > 0, fwd, bwd)

    k1 = rhs(values)
    k2 = rhs(values + tau * k1)
    return values + 0.5 * tau * (k1 + k2)


# ---------------------------------------------------------------------------
# force substep (semi-Lagrangian in v with moment restoration)
# ---------------------------------------------------------------------------

def _rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    ax = axis / np.linalg.norm(axis)
    c, s = np.cos(angle), np.sin(angle)
    K = np.array([[0.0, -ax[2], ax[1]], [ax[2], 0.0, -ax[0]], [-ax[1], ax[0], 0.0]])
    return np.eye(3) * c + s * K + (1.0 - c) * np.outer(ax, ax)


def _interp_on_grid(grid: VelocityGrid, values: np.ndarray, points: np.ndarray,
                    fill: float) -> np.ndarray:
    """Trilinear interpolation at arbitrary points with constant extension."""
    n = grid.n_per_axis
    rel = points / grid.dv - 0.5 + n / 2.0
    base = np.floor(rel).astype(np.int64)
    frac = rel - base
    padded = np.full((n + 2, n + 2, n + 2), fill)
    padded[1:-1, 1:-1, 1:-1] = values.reshape(n, n, n)
    # clamp so far-outside points read pure fill from the one-cell halo
    idx = np.clip(base + 1, 0, n)
    frac = np.where(base + 1 < 0, 0.0, np.where(base + 1 > n, 1.0, frac))
    out = np.zeros(points.shape[0])
    for cx in (0, 1):
        wx = frac[:, 0] if cx else 1.0 - frac[:, 0]
        for cy in (0, 1):
            wy = frac[:, 1] if cy else 1.0 - frac[:, 1]
            for cz in (0, 1):
                wz = frac[:, 2] if cz else 1.0 - frac[:, 2]
                out += wx * wy * wz * padded[idx[:, 0] + cx, idx[:, 1] + cy, idx[:, 2] + cz]
    return out


def _restore_moments(grid: VelocityGrid, values: np.ndarray,
                     columns: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Shift by the minimal-span invariant combination so the weighted moments
    against ``columns`` equal ``targets`` exactly."""
    w = grid.maxwellian_weights
    gram = columns.T @ (w[:, None] * columns)
    defect = columns.T @ (w * values) - targets
    return values - columns @ np.linalg.solve(gram, defect)


def _force_substep(values: np.ndarray, phase: PhaseGrid, field_: ForceField,
                   t_mid: float, tau: float, kind: str) -> np.ndarray:
    if isinstance(field_, ZeroForce) or tau == 0.0:
        return values
    grid = phase.velocity
    fill = 1.0 if kind == RELATIVE_DENSITY else 0.0
    nodes = grid.nodes
    inv = grid.invariants()
    w = grid.maxwellian_weights
    out = np.empty_like(values)
    for cx in range(phase.n_x):
        x = phase.x_centers[cx]
        cell = values[cx]
        if isinstance(field_, MagneticForce):
            B = field_.B(t_mid, x)
            bmag = float(np.linalg.norm(B))
            if bmag == 0.0:
                out[cx] = cell
                continue
            # Characteristics rotate as v(tau) = R(axis, -|B| tau) v(0); the
            # departure point applies the inverse rotation to each node.
            departure = nodes @ _rotation_matrix(B, bmag * tau).T
            new = _interp_on_grid(grid, cell, departure, fill)
            # Momentum rotates exactly; mass and |v|^2 are invariant.
            u0 = (w * cell) @ nodes
            targets = np.empty(5)
            targets[0] = float(np.dot(w, cell))
            targets[1:4] = _rotation_matrix(B, -bmag * tau) @ u0
            targets[4] = float(np.dot(w, cell * inv[:, 4]))
            out[cx] = _restore_moments(grid, new, inv, targets)
        else:
            # generic admissible force: two-stage backward characteristic trace
            k1 = field_.evaluate(t_mid, x, nodes)
            half = nodes - 0.5 * tau * k1
            k2 = field_.evaluate(t_mid, x, half)
            departure = nodes - tau * k2
            new = _interp_on_grid(grid, cell, departure, fill)
            cols = inv[:, [0, 4]]
            targets = np.array([float(np.dot(w, cell)),
                                float(np.dot(w, cell * inv[:, 4]))])
            out[cx] = _restore_moments(grid, new, cols, targets)
    return out


# ---------------------------------------------------------------------------
# collision substeps
# ---------------------------------------------------------------------------

def _nonlinear_rate(grid: VelocityGrid, table: CollisionTable, G: np.ndarray,
                    entropy_consistent: bool, floor: float) -> tuple[np.ndarray, float]:
    """Time derivative of G under collisions and the dissipation rate R_v.

    The rate is discretized so its linearization at G = 1 is exactly the
    weak-form linearized operator (the epsilon-sweep gaps then vanish cleanly
    with the fluctuation size).  With ``entropy_consistent`` the derivative
    gains a correction along the invariant-free part of log G making
    <log G, dG/dt> = -R_v hold exactly.
    """
    raw, r_v = consistent_collision_rate(table, G - 1.0,
                                         with_dissipation=entropy_consistent)
    q0 = conservation_fix(grid, raw)
    if not entropy_consistent:
        return q0, 0.0
    logG = np.log(np.maximum(G, max(floor, 1e-300)))
    d = conservation_fix(grid, logG)
    w = grid.maxwellian_weights
    denom = float(np.dot(w * d, d))
    defect = r_v + float(np.dot(w * logG, q0))
    scale = float(np.dot(w * logG, logG))
    if denom > 1e-14 * max(scale, 1e-300):
        q0 = q0 - (defect / denom) * d
    return q0, r_v


def _collision_nonlinear(grid: VelocityGrid, table: CollisionTable,
                         G: np.ndarray, tau: float,
                         config: SolverConfig) -> tuple[np.ndarray, float]:
    """One collision substep; returns the new cell values and the increment of
    the time-integrated dissipation (same tableau as the state update)."""
    ec = config.entropy_consistent
    floor = config.positivity_floor
    if config.collision_integrator == "explicit_rk2":
        k1, r1 = _nonlinear_rate(grid, table, G, ec, floor)
        g2 = G + tau * k1
        k2, r2 = _nonlinear_rate(grid, table, g2, ec, floor)
        return G + 0.5 * tau * (k1 + k2), 0.5 * tau * (r1 + r2)
    if config.collision_integrator == "rk4":
        k1, r1 = _nonlinear_rate(grid, table, G, ec, floor)
        k2, r2 = _nonlinear_rate(grid, table, G + 0.5 * tau * k1, ec, floor)
        k3, r3 = _nonlinear_rate(grid, table, G + 0.5 * tau * k2, ec, floor)
        k4, r4 = _nonlinear_rate(grid, table, G + tau * k3, ec, floor)
        new = G + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return new, (tau / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
    # semi-implicit Euler: explicit gain, implicit loss frequency
    if ec:
        raise ValueError("entropy_consistent requires an explicit collision integrator")
    nu = _loss_frequency(grid, table, G)
    q = conservation_fix(grid, q_bilinear(table, G))
    gain = q + G * nu
    return (G + tau * gain) / (1.0 + tau * nu), tau * dissipation_rate_v(table, G)


def _loss_frequency(grid: VelocityGrid, table: CollisionTable, G: np.ndarray) -> np.ndarray:
    """nu_i = sum_j <b>_sigma(v_i - v_j) G_j wM_j, the relaxation frequency of
    the loss side."""
    n = grid.n_per_axis
    nd = 2 * n - 1
    field3 = (G * grid.maxwellian_weights).reshape(n, n, n)
    beta = table.b_of_d.reshape(nd, nd, nd)
    if not table.kernel.sigma_independent:
        beta = (table.bvals @ table.sphere.weights).reshape(nd, nd, nd)
    padded = np.zeros((3 * n - 2, 3 * n - 2, 3 * n - 2))
    padded[n - 1:2 * n - 1, n - 1:2 * n - 1, n - 1:2 * n - 1] = field3
    out = np.empty((n, n, n))
    for ix in range(n):
        for iy in range(n):
            for iz in range(n):
                block = padded[ix:ix + nd, iy:iy + nd, iz:iz + nd]
                out[ix, iy, iz] = float(np.sum(beta * block))
    return out.ravel()


def _positivity_floor(values: np.ndarray, grid: VelocityGrid, floor: float) -> np.ndarray:
    if floor <= 0.0 or not np.any(values < floor):
        return values
    w = grid.maxwellian_weights
    mass_before = float(np.dot(w, values))
    floored = np.maximum(values, floor)
    mass_after = float(np.dot(w, floored))
    if mass_after <= 0.0 or mass_before <= 0.0:
        raise RuntimeError("nonpositive mass after positivity flooring")
    return floored * (mass_before / mass_after)


def _collision_linearized(grid: VelocityGrid, table: CollisionTable,
                          g: np.ndarray, tau: float,
                          config: SolverConfig) -> np.ndarray:
    # The solver composes the operator with the conservation projection so the
    # linearized flow agrees exactly with the small-fluctuation limit of the
    # nonlinear substep (whose rate is projected the same way).
    def rate(x: np.ndarray) -> np.ndarray:
        return -conservation_fix(grid, linearized_collision(table, x))

    if config.collision_integrator == "explicit_rk2":
        k1 = rate(g)
        k2 = rate(g + tau * k1)
        return g + 0.5 * tau * (k1 + k2)
    if config.collision_integrator == "rk4":
        k1 = rate(g)
        k2 = rate(g + 0.5 * tau * k1)
        k3 = rate(g + 0.5 * tau * k2)
        k4 = rate(g + tau * k3)
        return g + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    nu = _loss_frequency(grid, table, np.ones(grid.size))
    lg = -rate(g)
    return (g - tau * (lg - nu * g)) / (1.0 + tau * nu)


# ---------------------------------------------------------------------------
# full steps and trajectories
# ---------------------------------------------------------------------------

@dataclass
class StepRecord:
    time: float
    dissipation_increment: float = 0.0   # integral of R over the step (nonlinear)
    quadratic_energy: float = 0.0        # (1/2) int <g^2> dx at step start (linearized)
    q2_dissipation: float = 0.0          # (1/4) int <<q^2>> dx at step start (linearized)


def step_nonlinear(state: State, phase: PhaseGrid, table: CollisionTable,
                   field_: ForceField, config: SolverConfig) -> tuple[State, StepRecord]:
    if state.kind != RELATIVE_DENSITY:
        raise ValueError("step_nonlinear expects a relative-density state")
    grid = phase.velocity
    dt = config.dt
    t = state.time
    vals = _transport(state.values, phase, 0.5 * dt, config.advection_scheme)
    vals = _force_substep(vals, phase, field_, t + 0.25 * dt, 0.5 * dt, state.kind)
    r_inc = 0.0
    new_cells = np.empty_like(vals)
    for cx in range(phase.n_x):
        cell, r_cell = _collision_nonlinear(grid, table, vals[cx], dt, config)
        cell = _positivity_floor(cell, grid, config.positivity_floor)
        new_cells[cx] = cell
        r_inc += r_cell
    r_inc *= phase.dx
    vals = _force_substep(new_cells, phase, field_, t + 0.75 * dt, 0.5 * dt, state.kind)
    vals = _transport(vals, phase, 0.5 * dt, config.advection_scheme)
    for cx in range(phase.n_x):
        vals[cx] = _positivity_floor(vals[cx], grid, config.positivity_floor)
    return State(values=vals, time=t + dt, kind=state.kind), StepRecord(
        time=t, dissipation_increment=r_inc)


def step_linearized(state: State, phase: PhaseGrid, table: CollisionTable,
                    field_: ForceField, config: SolverConfig) -> tuple[State, StepRecord]:
    if state.kind != FLUCTUATION:
        raise ValueError("step_linearized expects a fluctuation state")
    grid = phase.velocity
    dt = config.dt
    t = state.time
    vals = _transport(state.values, phase, 0.5 * dt, config.advection_scheme)
    vals = _force_substep(vals, phase, field_, t + 0.25 * dt, 0.5 * dt, state.kind)
    new_cells = np.empty_like(vals)
    for cx in range(phase.n_x):
        new_cells[cx] = _collision_linearized(grid, table, vals[cx], dt, config)
    vals = _force_substep(new_cells, phase, field_, t + 0.75 * dt, 0.5 * dt, state.kind)
    vals = _transport(vals, phase, 0.5 * dt, config.advection_scheme)
    return State(values=vals, time=t + dt, kind=state.kind), StepRecord(time=t)


@dataclass
class Trajectory:
    kind: str
    snapshot_times: np.ndarray
    snapshots: list[State]
    step_times: np.ndarray                   # all step boundaries
    dissipation_integral: np.ndarray | None  # cumulative int R dt (nonlinear)
    quadratic_energy: np.ndarray | None      # (1/2) int <g^2> dx per boundary
    q2_dissipation: np.ndarray | None        # (1/4) int <<q^2>> dx per boundary

    def state_at(self, t: float) -> State:
        idx = int(np.argmin(np.abs(self.snapshot_times - t)))
        if abs(self.snapshot_times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t = {t}")
        return self.snapshots[idx]


def _quadratic_energy(phase: PhaseGrid, values: np.ndarray) -> float:
    w = phase.velocity.maxwellian_weights
    return 0.5 * phase.x_integral(values**2 @ w)


def evolve(initial: State, phase: PhaseGrid, table: CollisionTable,
           field_: ForceField, config: SolverConfig,
           snapshot_times: Sequence[float],
           validate_field: bool = True,
           track_q2: bool = False,
           progress: Callable[[int, int], None] | None = None) -> Trajectory:
    """Advance ``initial`` to every requested snapshot time (each must be an
    integer multiple of dt, no interpolation in time) and return the stored
    snapshots together with per-step diagnostics.

    Two runs with identical inputs produce bit-identical trajectories.
    """
    if validate_field:
        validation = validate_force(field_, phase.velocity)
        if not validation.admissible:
            raise AdmissibilityError(validation.failure_reason())
    check_stability(phase, table, config)

    snapshot_times = np.asarray(sorted(float(t) for t in snapshot_times))
    if snapshot_times.size == 0:
        raise ValueError("at least one snapshot time is required")
    steps_at = []
    for t in snapshot_times:
        ratio = (t - initial.time) / config.dt
        steps = int(round(ratio))
        if steps < 0 or abs(ratio - steps) > 1e-9:
            raise ValueError(
                f"snapshot time {t} is not an integer multiple of dt = {config.dt} "
                f"past the initial time {initial.time}"
            )
        steps_at.append(steps)
    n_steps = steps_at[-1]

    stepper = step_nonlinear if initial.kind == RELATIVE_DENSITY else step_linearized
    state = initial.copy()
    if state.kind == RELATIVE_DENSITY:
        if np.any(state.values < 0.0):
            raise ValueError("relative-density states must be nonnegative")
        for cx in range(phase.n_x):
            state.values[cx] = _positivity_floor(state.values[cx], phase.velocity,
                                                 config.positivity_floor)
    snapshots: list[State] = []
    if 0 in steps_at:
        snapshots.append(state.copy())
    step_times = [state.time]
    r_cum = [0.0]
    energies = [_quadratic_energy(phase, state.values)]
    q2s = []

    def step_q2(s: State) -> float:
        return phase.x_integral(np.array(
            [q_squared_bracket(table, s.values[cx]) for cx in range(phase.n_x)]))

    if initial.kind == FLUCTUATION and track_q2:
        q2s.append(step_q2(state))
    for k in range(n_steps):
        state, record = stepper(state, phase, table, field_, config)
        step_times.append(state.time)
        r_cum.append(r_cum[-1] + record.dissipation_increment)
        energies.append(_quadratic_energy(phase, state.values))
        if initial.kind == FLUCTUATION and track_q2:
            q2s.append(step_q2(state))
        if (k + 1) in steps_at:
            snapshots.append(state.copy())
        if progress is not None:
            progress(k + 1, n_steps)
    return Trajectory(
        kind=initial.kind,
        snapshot_times=snapshot_times,
        snapshots=snapshots,
        step_times=np.asarray(step_times),
        dissipation_integral=np.asarray(r_cum) if initial.kind == RELATIVE_DENSITY else None,
        quadratic_energy=np.asarray(energies),
        q2_dissipation=np.asarray(q2s) if q2s else None,
    )


# ---------------------------------------------------------------------------
# local conservation-law residuals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentResiduals:
    times: np.ndarray
    mass: np.ndarray       # max_x |d/dt <G> + div_x <v G>|
    momentum: np.ndarray   # max_x |d/dt <v G> + div_x <v v G> - <F G>|
    energy: np.ndarray     # max_x |d/dt <v^2 G> + div_x <v1 v^2 G> - 2 <F.v G>|


def moment_laws(trajectory: Trajectory, phase: PhaseGrid, field_: ForceField) -> MomentResiduals:
    """Centered-difference residuals of the local mass, momentum, and energy
    balance laws on the stored snapshots (needs at least three, uniformly
    spaced)."""
    times = trajectory.snapshot_times
    if times.size < 3:
        raise ValueError("moment_laws needs at least three snapshots")
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=0.0):
        raise ValueError("moment_laws needs uniformly spaced snapshots")
    h = float(dts[0])
    grid = phase.velocity
    w = grid.maxwellian_weights
    v = grid.nodes
    sq = np.sum(v * v, axis=1)

    def cell_moments(state: State):
        vals = state.values
        mass = vals @ w                                        # (n_x,)
        mom = vals @ (w[:, None] * v)                          # (n_x, 3)
        eng = vals @ (w * sq)                                  # (n_x,)
        flux_mass = vals @ (w * v[:, 0])
        flux_mom = vals @ (w[:, None] * (v[:, 0:1] * v))       # (n_x, 3)
        flux_eng = vals @ (w * v[:, 0] * sq)
        src_mom = np.empty((phase.n_x, 3))
        src_eng = np.empty(phase.n_x)
        for cx in range(phase.n_x):
            F = field_.evaluate(state.time, phase.x_centers[cx], v)
            src_mom[cx] = (w * vals[cx]) @ F
            src_eng[cx] = float(np.dot(w * vals[cx], 2.0 * np.sum(F * v, axis=1)))
        return mass, mom, eng, flux_mass, flux_mom, flux_eng, src_mom, src_eng

    snaps = [cell_moments(s) for s in trajectory.snapshots]
    out_t, out_m, out_p, out_e = [], [], [], []
    for k in range(1, len(snaps) - 1):
        m_prev, p_prev, e_prev = snaps[k - 1][0], snaps[k - 1][1], snaps[k - 1][2]
        m_next, p_next, e_next = snaps[k + 1][0], snaps[k + 1][1], snaps[k + 1][2]
        _, _, _, fm, fp, fe, sp, se = snaps[k]
        dm = (m_next - m_prev) / (2 * h)
        dp = (p_next - p_prev) / (2 * h)
        de = (e_next - e_prev) / (2 * h)
        res_m = dm + _div_x_1d(fm, phase)
        res_p = dp + _div_x_nd(fp, phase) - sp
        res_e = de + _div_x_1d(fe, phase) - se
        out_t.append(times[k])
        out_m.append(float(np.abs(res_m).max()))
        out_p.append(float(np.abs(res_p).max()))
        out_e.append(float(np.abs(res_e).max()))
    return MomentResiduals(times=np.asarray(out_t), mass=np.asarray(out_m),
                           momentum=np.asarray(out_p), energy=np.asarray(out_e))


def _div_x_1d(cell_values: np.ndarray, phase: PhaseGrid) -> np.ndarray:
    if phase.n_x == 1:
        return np.zeros_like(cell_values)
    modes = np.fft.rfft(cell_values, axis=0)
    k = np.arange(modes.shape[0])
    return np.fft.irfft(modes * (2j * np.pi * k), n=phase.n_x, axis=0)


def _div_x_nd(cell_values: np.ndarray, phase: PhaseGrid) -> np.ndarray:
    if phase.n_x == 1:
        return np.zeros_like(cell_values)
    modes = np.fft.rfft(cell_values, axis=0)
    k = np.arange(modes.shape[0]).reshape(-1, *([1] * (cell_values.ndim - 1)))
    return np.fft.irfft(modes * (2j * np.pi * k), n=phase.n_x, axis=0)
