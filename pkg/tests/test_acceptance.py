"""Acceptance suite at desk scale: homogeneous mode, n = 16, v_max = 6,
N_sigma = 32, Maxwell-molecule kernel b0 = 1, B = (0, 0, 1) unless a
criterion states otherwise.  Each test prints one PASS/FAIL line with the
measured values.  On a single core the full module takes on the order of an
hour; the epsilon sweep dominates.
"""
import numpy as np
import pytest

from linboltz import (
    PhaseGrid,
    SolverConfig,
    State,
    build_grid,
    build_table,
    clipped_initial_fluctuation,
    conservation_fix,
    density_from_fluctuation,
    dissipation_equality_residual,
    entropic_metric,
    entropy_H,
    evolve,
    half_quadratic,
    linearized_collision,
    magnetic_force,
    maxwell_molecule,
    moment_laws,
    sphere_quadrature,
    validate_force,
    zero_force,
)
from linboltz import harness
from linboltz.collision import q_bilinear, q_squared_bracket
from linboltz.harness import ProfileSection, initial_profile
from linboltz.reference import naive_linearized_matrix, naive_q_bilinear
from linboltz.solver import FLUCTUATION, RELATIVE_DENSITY


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {'PASS' if ok else 'FAIL'} - {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def ws():
    grid = build_grid(16, 6.0)
    sphere = sphere_quadrature(32)
    kernel = maxwell_molecule(1.0)
    table = build_table(grid, sphere, kernel)
    return grid, sphere, kernel, table


def wnorm(grid, x):
    return float(np.sqrt(np.dot(grid.maxwellian_weights * x, x)))


def test_operator_suite(ws):
    grid, sphere, kernel, table = ws
    w = grid.maxwellian_weights
    details = []
    ok = True

    inv = grid.invariants()
    linear_res = []
    for col in inv[:, :4].T:
        linear_res.append(wnorm(grid, linearized_collision(table, col)) / wnorm(grid, col))
    ok &= max(linear_res) <= 1e-3
    details.append(f"max ||L phi||/||phi|| linear = {max(linear_res):.2e} (<= 1e-3)")

    sq = inv[:, 4]
    res16 = wnorm(grid, linearized_collision(table, sq)) / wnorm(grid, sq)
    ok &= res16 <= 5e-2
    details.append(f"||L v^2||/||v^2|| n16 = {res16:.2e} (<= 5e-2)")

    grid32 = build_grid(32, 6.0)
    table32 = build_table(grid32, sphere, kernel, store_stencils=False)
    sq32 = np.sum(grid32.nodes**2, axis=1)
    res32 = wnorm(grid32, linearized_collision(table32, sq32)) / wnorm(grid32, sq32)
    ok &= res32 <= 0.6 * res16
    details.append(f"n32/n16 ratio = {res32 / res16:.3f} (<= 0.6, O(dv^2) halving)")

    rng = np.random.default_rng(2024)
    sa_worst = 0.0
    nonneg_worst = np.inf
    classical_worst = 0.0
    for _ in range(3):
        g = rng.standard_normal(grid.size)
        k = rng.standard_normal(grid.size)
        Lg = linearized_collision(table, g)
        Lk = linearized_collision(table, k)
        sa_worst = max(sa_worst, abs(np.dot(w * k, Lg) - np.dot(w * g, Lk))
                       / (wnorm(grid, g) * wnorm(grid, k)))
        quad = float(np.dot(w * g, Lg))
        nonneg_worst = min(nonneg_worst, quad / wnorm(grid, g) ** 2)
        q2 = q_squared_bracket(table, g)
        classical_worst = max(classical_worst, abs(quad - q2) / q2)
    ok &= sa_worst <= 1e-8
    ok &= nonneg_worst >= -1e-10
    ok &= classical_worst <= 1e-6
    details.append(f"self-adjoint gap = {sa_worst:.2e} (<= 1e-8)")
    details.append(f"min <g,Lg>/||g||^2 = {nonneg_worst:.2e} (>= -1e-10)")
    details.append(f"classical identity gap = {classical_worst:.2e} (<= 1e-6)")

    grid6 = build_grid(6, 6.0)
    sphere12 = sphere_quadrature(12)
    table6 = build_table(grid6, sphere12, kernel)
    rng6 = np.random.default_rng(7)
    G6 = np.abs(1.0 + 0.25 * rng6.standard_normal(grid6.size))
    q_ref = naive_q_bilinear(grid6, sphere12, kernel, G6, G6)
    q_gap = np.abs(q_bilinear(table6, G6) - q_ref).max() / np.abs(q_ref).max()
    lmat = naive_linearized_matrix(grid6, sphere12, kernel)
    g6 = rng6.standard_normal(grid6.size)
    l_gap = (np.abs(linearized_collision(table6, g6) - lmat @ g6).max()
             / np.abs(lmat @ g6).max())
    ok &= q_gap <= 1e-12 and l_gap <= 1e-12
    details.append(f"n6 dense-oracle gaps: Q = {q_gap:.2e}, L = {l_gap:.2e} (<= 1e-12)")

    _report("operator suite", bool(ok), "; ".join(details))


def test_equilibrium_and_admissibility(ws):
    grid, sphere, kernel, table = ws
    field = magnetic_force([0.0, 0.0, 1.0])
    report = validate_force(field, grid)
    checks = (report.max_v_dot_f, report.max_divergence)
    ok = report.admissible and max(checks) <= 1e-12

    phase = PhaseGrid(velocity=grid)
    cfg = SolverConfig(dt=0.01, t_end=1.0)
    state = State(values=np.ones((1, grid.size)), time=0.0, kind=RELATIVE_DENSITY)
    traj = evolve(state, phase, table, field, cfg, snapshot_times=[1.0])
    drift_l1 = float(np.dot(grid.maxwellian_weights,
                            np.abs(traj.snapshots[-1].values[0] - 1.0)))
    ok = ok and drift_l1 <= 1e-12
    _report("equilibrium & admissibility", bool(ok),
            f"max|F.v| = {report.max_v_dot_f:.2e}, max|div F| = "
            f"{report.max_divergence:.2e} (<= 1e-12); |G-1| in L1 after t=1: "
            f"{drift_l1:.2e} (<= 1e-12)")


def test_conservation_laws(ws):
    grid, sphere, kernel, table = ws
    phase = PhaseGrid(velocity=grid)
    field = magnetic_force([0.0, 0.0, 1.0])
    # momentum-carrying data so the magnetic source term is exercised
    g = initial_profile(grid, ProfileSection(bound=8.0, include_invariants=True))
    eps = 0.05
    G = density_from_fluctuation(clipped_initial_fluctuation(g, eps), eps)
    t_end = 0.25
    cfg = SolverConfig(dt=0.01, t_end=t_end)
    state = State(values=G[None, :].copy(), time=0.0, kind=RELATIVE_DENSITY)
    times = np.round(np.arange(0, 26) * 0.01, 10)
    traj = evolve(state, phase, table, field, cfg, snapshot_times=times)
    w = grid.maxwellian_weights
    sq = np.sum(grid.nodes**2, axis=1)
    mass = np.array([float(np.dot(w, s.values[0])) for s in traj.snapshots])
    energy = np.array([float(np.dot(w * sq, s.values[0])) for s in traj.snapshots])
    mass_rate = np.abs(mass - mass[0]).max() / t_end
    energy_rate = np.abs(energy - energy[0]).max() / t_end
    res = moment_laws(traj, phase, field)
    ok = mass_rate <= 1e-9 and energy_rate <= 1e-9 and res.momentum.max() <= 1e-6
    _report("conservation", bool(ok),
            f"mass drift/time = {mass_rate:.2e}, energy drift/time = "
            f"{energy_rate:.2e} (<= 1e-9); momentum-law residual vs <(vxB)G> = "
            f"{res.momentum.max():.2e} (<= 1e-6)")


def test_entropy_inequality(ws):
    grid, sphere, kernel, table = ws
    phase = PhaseGrid(velocity=grid)
    g = initial_profile(grid, ProfileSection(bound=8.0))
    eps = 0.05
    G_in = density_from_fluctuation(clipped_initial_fluctuation(g, eps), eps)
    t_end = 0.1
    slacks = {}
    for dt in (0.01, 0.005):
        cfg = SolverConfig(dt=dt, t_end=t_end, collision_integrator="rk4",
                           entropy_consistent=True)
        st = State(values=G_in[None, :].copy(), time=0.0, kind=RELATIVE_DENSITY)
        traj = evolve(st, phase, table, zero_force(), cfg, snapshot_times=[t_end])
        H_in = entropy_H(grid, traj.snapshots[0].values, phase)
        H_t = entropy_H(grid, traj.snapshots[-1].values, phase)
        slacks[dt] = H_in - H_t - float(traj.dissipation_integral[-1])
    tol = 1e-8 * H_in
    shrink = abs(slacks[0.01]) / max(abs(slacks[0.005]), 1e-300)
    ok = abs(slacks[0.01]) <= tol and slacks[0.01] >= -tol and shrink >= 4.0
    _report("entropy inequality", bool(ok),
            f"slack(dt=0.01) = {slacks[0.01]:.2e} vs tol {tol:.2e}; "
            f"shrink at dt/2 = {shrink:.1f}x (>= 4)")


def test_dissipation_equality(ws):
    grid, sphere, kernel, table = ws
    phase = PhaseGrid(velocity=grid)
    g = initial_profile(grid, ProfileSection())
    t_end = 0.15
    residuals = {}
    for dt in (0.01, 0.005):
        cfg = SolverConfig(dt=dt, t_end=t_end)
        st = State(values=g[None, :].copy(), time=0.0, kind=FLUCTUATION)
        traj = evolve(st, phase, table, zero_force(), cfg, snapshot_times=[t_end],
                      track_q2=True)
        residuals[dt] = dissipation_equality_residual(traj) / traj.quadratic_energy[0]
    shrink = residuals[0.01] / max(residuals[0.005], 1e-300)
    ok = residuals[0.01] <= 1e-4 and 2.5 <= shrink <= 6.5
    _report("dissipation equality", bool(ok),
            f"relative residual(dt=0.01) = {residuals[0.01]:.2e} (<= 1e-4); "
            f"shrink at dt/2 = {shrink:.2f}x (approx 4)")


def test_strong_linearized_limit(tmp_path):
    cfg = harness.config_from_dict({"output_dir": str(tmp_path)})
    summary = harness.run_epsilon_sweep(cfg, tmp_path)
    ok = True
    details = []
    for t, snap in summary["snapshots"].items():
        sm = snap["slope_entropic_metric"]
        sl = snap["slope_l1_gap"]
        ok &= snap["entropic_metric_decreasing"] and 0.6 <= sm <= 1.4
        ok &= snap["l1_gap_decreasing"] and 0.6 <= sl <= 1.4
        ok &= snap["q_gap_decreasing"]
        details.append(f"t={t}: slopes metric={sm:.2f} l1={sl:.2f} "
                       f"q_slope={snap['slope_q_gap']:.2f} "
                       f"monotone={snap['entropic_metric_decreasing']}"
                       f"/{snap['l1_gap_decreasing']}/{snap['q_gap_decreasing']}")
    _report("strong linearized limit", bool(ok), "; ".join(details))


def test_initial_data_clipping(ws):
    grid, sphere, kernel, table = ws
    g = initial_profile(grid, ProfileSection())
    metrics = []
    for eps in (0.4, 0.2, 0.1, 0.05):
        g_clip = clipped_initial_fluctuation(g, eps)
        G = density_from_fluctuation(g_clip, eps)
        assert G.min() >= 0.0
        metrics.append(entropic_metric(grid, G, eps, g).metric)
    monotone = bool(np.all(np.diff(metrics) < 0.0))
    _report("initial-data clipping", monotone,
            "metric(t=0) over eps (0.4, 0.2, 0.1, 0.05) = "
            + ", ".join(f"{m:.3e}" for m in metrics) + " (strictly decreasing)")


def test_determinism_bit_identical(tmp_path):
    # Repeated runs of the full pipeline produce byte-identical artifacts
    # (exercised at a reduced grid so two complete sweeps stay cheap).
    cfg = harness.config_from_dict({
        "grid": {"n_per_axis": 8, "v_max": 6.0, "n_sigma": 12},
        "solver": {"dt": 0.02, "t_end": 0.1},
        "sweep": {"epsilons": [0.4, 0.1], "snapshot_times": [0.05, 0.1]},
    })
    harness.run_epsilon_sweep(cfg, tmp_path / "a")
    harness.run_epsilon_sweep(cfg, tmp_path / "b")
    same_csv = (tmp_path / "a/sweep.csv").read_bytes() == (tmp_path / "b/sweep.csv").read_bytes()
    same_json = (tmp_path / "a/summary.json").read_bytes() == (tmp_path / "b/summary.json").read_bytes()
    _report("determinism", bool(same_csv and same_json),
            f"sweep.csv identical = {same_csv}, summary.json identical = {same_json}")
