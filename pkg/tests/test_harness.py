import json
from pathlib import Path

import numpy as np
import pytest

from linboltz import harness
from linboltz.harness import ConfigError, SWEEP_HEADER


TINY = {
    "grid": {"n_per_axis": 6, "v_max": 5.0, "n_sigma": 6},
    "solver": {"dt": 0.05, "t_end": 0.1},
    "sweep": {"epsilons": [0.4, 0.2], "snapshot_times": [0.05, 0.1]},
    "conservation": {"eps": 0.05, "t_end": 0.1, "dt": 0.02, "snapshot_every": 1},
    "operators": {"oracle_n_per_axis": 4, "oracle_n_sigma": 6, "n_random": 2},
}


def tiny_config(**overrides):
    data = json.loads(json.dumps(TINY))
    data.update(overrides)
    return harness.config_from_dict(data)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        harness.config_from_dict({"grd": {}})
    with pytest.raises(ConfigError):
        harness.config_from_dict({"grid": {"n_per_axis": 8, "bogus": 1}})
    with pytest.raises(ConfigError):
        harness.config_from_dict({"sweep": {"profile": {"nam": "x"}}})


def test_epsilons_must_decrease_in_unit_interval():
    with pytest.raises(ConfigError):
        tiny_config(sweep={"epsilons": [0.1, 0.2], "snapshot_times": [0.05]})
    with pytest.raises(ConfigError):
        tiny_config(sweep={"epsilons": [1.5, 0.2], "snapshot_times": [0.05]})


def test_snapshot_times_must_align_with_dt():
    with pytest.raises(ConfigError):
        tiny_config(sweep={"epsilons": [0.4, 0.2], "snapshot_times": [0.013]})


def test_inadmissible_force_fails_fast(tmp_path):
    cfg = tiny_config(force={"variant": "custom", "expression": "vec(1, 0, 0)",
                             "divergence": "0"})
    with pytest.raises(ConfigError) as err:
        harness.run_epsilon_sweep(cfg, tmp_path)
    assert "F.v" in str(err.value)


def test_yaml_roundtrip(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(
        "grid: {n_per_axis: 6, v_max: 5.0, n_sigma: 6}\n"
        "solver: {dt: 0.05, t_end: 0.1}\n"
        "sweep:\n  epsilons: [0.4, 0.2]\n  snapshot_times: [0.1]\n",
        encoding="utf-8",
    )
    cfg = harness.load_config(path)
    assert cfg.grid.n_per_axis == 6
    assert cfg.sweep.epsilons == (0.4, 0.2)


def test_initial_profile_orthogonal_normalized():
    from linboltz import build_grid
    from linboltz.entropy import half_quadratic
    from linboltz.harness import ProfileSection, initial_profile

    grid = build_grid(8, 5.0)
    g = initial_profile(grid, ProfileSection())
    moments = grid.invariants().T @ (grid.maxwellian_weights * g)
    assert np.abs(moments).max() <= 1e-13
    assert half_quadratic(grid, g) == pytest.approx(0.5, rel=1e-12)
    g_inv = initial_profile(grid, ProfileSection(include_invariants=True))
    moments_inv = grid.invariants().T @ (grid.maxwellian_weights * g_inv)
    assert np.abs(moments_inv).max() > 1e-3


def test_sweep_outputs_and_determinism(tmp_path):
    cfg = tiny_config()
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    harness.run_epsilon_sweep(cfg, out1)
    harness.run_epsilon_sweep(cfg, out2)
    csv1 = (out1 / "sweep.csv").read_bytes()
    csv2 = (out2 / "sweep.csv").read_bytes()
    assert csv1 == csv2
    lines = csv1.decode().strip().split("\n")
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 1 + 2 * 2  # eps x snapshots
    for line in lines[1:]:
        fields = line.split(",")
        assert len(fields) == len(SWEEP_HEADER.split(","))
        values = [float(x) for x in fields]
        assert all(v >= 0.0 for v in (values[4], values[5], values[6]))
    assert (out1 / "summary.json").exists()
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["tool_version"]
    assert manifest["grid_hash"] == json.loads((out2 / "manifest.json").read_text())["grid_hash"]
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()


def test_sweep_summary_schema(tmp_path):
    cfg = tiny_config()
    summary = harness.run_epsilon_sweep(cfg, tmp_path)
    assert set(summary) == {"epsilons", "snapshots", "pass"}
    for snap in summary["snapshots"].values():
        assert {"slope_entropic_metric", "slope_l1_gap", "slope_q_gap",
                "entropic_metric_decreasing", "l1_gap_decreasing",
                "q_gap_decreasing"} <= set(snap)


def test_conservation_suite_outputs(tmp_path):
    cfg = tiny_config()
    summary = harness.run_conservation_suite(cfg, tmp_path)
    assert summary["mass_law_max"] <= 1e-10
    assert summary["energy_law_max"] <= 1e-10
    ent = summary["entropy"]
    assert abs(ent["final_slack_dt"]) <= 1e-8 * ent["H_in_dt"]
    assert (tmp_path / "conservation.csv").exists()
    assert (tmp_path / "entropy.csv").exists()
    rows = (tmp_path / "entropy.csv").read_text().strip().split("\n")
    assert rows[0] == "t,H,R,int_R,entropy_slack"
    for line in rows[1:]:
        t, H, R, int_r, slack = map(float, line.split(","))
        assert H >= 0.0 and R >= 0.0
        assert slack >= -1e-8 * max(ent["H_in_dt"], 1e-300)


def test_operator_suite_outputs(tmp_path):
    cfg = tiny_config()
    report = harness.run_operator_suite(cfg, tmp_path)
    assert report["self_adjointness_gap"] <= 1e-8
    assert report["quadratic_form_min"] >= -1e-10
    assert report["classical_identity_gap"] <= 1e-6
    assert report["oracle_q_max_rel_gap"] <= 1e-12
    assert report["oracle_L_max_rel_gap"] <= 1e-12
    assert (tmp_path / "operators.json").exists()


def test_force_validation_report(tmp_path):
    cfg = tiny_config()
    payload = harness.run_force_validation(cfg, tmp_path)
    assert payload["admissible"] is True
    assert payload["equilibrium_residual"] <= 1e-12
    cfg_bad = tiny_config(force={"variant": "custom", "expression": "v",
                                 "divergence": "3"})
    payload_bad = harness.run_force_validation(cfg_bad, tmp_path)
    assert payload_bad["admissible"] is False
    assert "failure_reason" in payload_bad


def test_cli_validate_force(tmp_path, capsys):
    from linboltz.cli import main

    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(
        "grid: {n_per_axis: 6, v_max: 5.0, n_sigma: 6}\n"
        "force: {variant: magnetic, B: [0.0, 0.0, 1.0]}\n",
        encoding="utf-8",
    )
    code = main(["validate-force", "--config", str(cfg_path),
                 "--out", str(tmp_path / "out")])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS" in out


def test_cli_rejects_bad_config(tmp_path, capsys):
    from linboltz.cli import main

    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text("nonsense: {}\n", encoding="utf-8")
    code = main(["operators", "--config", str(cfg_path)])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_equilibrium_initial_data_keeps_all_gaps_zero():
    # g_in = 0: nonlinear and linearized runs both sit at equilibrium, so
    # every sweep gap vanishes identically for every epsilon.
    import numpy as np
    from linboltz import (PhaseGrid, SolverConfig, State, build_grid,
                          build_table, density_from_fluctuation,
                          entropic_metric, evolve, magnetic_force,
                          maxwell_molecule, sphere_quadrature)
    from linboltz.collision import q_gap_l1
    from linboltz.solver import FLUCTUATION, RELATIVE_DENSITY

    grid = build_grid(6, 5.0)
    table = build_table(grid, sphere_quadrature(6), maxwell_molecule(1.0))
    phase = PhaseGrid(velocity=grid)
    field = magnetic_force([0.0, 0.0, 1.0])
    cfg = SolverConfig(dt=0.05, t_end=0.1)
    zero = np.zeros(grid.size)
    lin = evolve(State(values=zero[None, :].copy(), time=0.0, kind=FLUCTUATION),
                 phase, table, field, cfg, [0.1])
    for eps in (0.4, 0.1):
        G = density_from_fluctuation(zero, eps)
        traj = evolve(State(values=G[None, :].copy(), time=0.0, kind=RELATIVE_DENSITY),
                      phase, table, field, cfg, [0.1])
        G_t = traj.snapshots[-1].values
        g_ref = lin.snapshots[-1].values
        gap = entropic_metric(grid, G_t, eps, g_ref, phase)
        assert gap.metric <= 1e-13 and gap.l1_gap <= 1e-13
        assert q_gap_l1(table, G_t[0], g_ref[0], eps) <= 1e-12
