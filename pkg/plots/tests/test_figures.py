from pathlib import Path

import numpy as np
import pytest

from sweep_plots import FigureSpec, SchemaError, fit_loglog_slope, plot, read_table
from sweep_plots.figures import SWEEP_HEADER

DATA = Path(__file__).parent / "data"


def synthetic_sweep_csv(path: Path, epsilons, times, metric_of) -> Path:
    lines = [",".join(SWEEP_HEADER)]
    for eps in epsilons:
        for t in times:
            m = metric_of(eps)
            lines.append(",".join(map(repr, [eps, t, 0.5, 0.5, m, 0.5 * m,
                                             2.0 * m, 1e-15, 1e-14, 1e-10])))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_slope_fit_on_linear_metric(tmp_path):
    csv = synthetic_sweep_csv(tmp_path / "sweep.csv", [0.4, 0.2, 0.1, 0.05],
                              [0.5], lambda eps: 0.37 * eps)
    spec = FigureSpec(input_csv=csv, kind="convergence_loglog",
                      output_image=tmp_path / "conv.png")
    sidecar = plot(spec)
    assert (tmp_path / "conv.png").exists()
    text = sidecar.read_text()
    slope_line = [l for l in text.splitlines() if "entropic_metric" in l][0]
    slope = float(slope_line.split()[-1])
    assert slope == pytest.approx(1.0, abs=0.01)


def test_fit_slope_excludes_noise_floor():
    eps = np.array([0.4, 0.2, 0.1, 0.05])
    vals = np.array([0.4, 0.2, 1e-14, 1e-15])
    slope = fit_loglog_slope(eps, vals)
    assert slope == pytest.approx(1.0, abs=1e-12)


def test_single_epsilon_refuses_slope_but_plots(tmp_path):
    csv = synthetic_sweep_csv(tmp_path / "sweep.csv", [0.2], [0.5],
                              lambda eps: 0.37 * eps)
    spec = FigureSpec(input_csv=csv, kind="convergence_loglog",
                      output_image=tmp_path / "conv.png")
    sidecar = plot(spec)
    assert (tmp_path / "conv.png").exists()
    assert "not_fitted" in sidecar.read_text()


def test_schema_mismatch_rejected(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("eps,t,wrong\n0.1,0.5,1.0\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_table(bad, SWEEP_HEADER)
    spec = FigureSpec(input_csv=bad, kind="convergence_loglog",
                      output_image=tmp_path / "x.png")
    with pytest.raises(SchemaError):
        plot(spec)


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError):
        FigureSpec(input_csv="x.csv", kind="pie_chart", output_image="x.png")


def test_sidecar_deterministic(tmp_path):
    csv = synthetic_sweep_csv(tmp_path / "sweep.csv", [0.4, 0.2, 0.1], [0.25, 0.5],
                              lambda eps: 1.3 * eps)
    spec1 = FigureSpec(input_csv=csv, kind="convergence_loglog",
                       output_image=tmp_path / "a.png")
    spec2 = FigureSpec(input_csv=csv, kind="convergence_loglog",
                       output_image=tmp_path / "b.png")
    s1 = plot(spec1).read_bytes()
    s2 = plot(spec2).read_bytes()
    assert s1 == s2
    # input untouched
    assert csv.read_text().startswith(",".join(SWEEP_HEADER))


def test_snapshot_filter(tmp_path):
    csv = synthetic_sweep_csv(tmp_path / "sweep.csv", [0.4, 0.2], [0.25, 0.5],
                              lambda eps: eps)
    spec = FigureSpec(input_csv=csv, kind="convergence_loglog",
                      output_image=tmp_path / "c.png", snapshot_filter=(0.5,))
    sidecar = plot(spec)
    text = sidecar.read_text()
    assert "t=0.5" in text and "t=0.25" not in text
    with pytest.raises(ValueError):
        plot(FigureSpec(input_csv=csv, kind="convergence_loglog",
                        output_image=tmp_path / "d.png", snapshot_filter=(9.0,)))


def test_real_sweep_renders_all_kinds(tmp_path):
    # CSVs captured from an actual solver run live in tests/data.
    for kind, name in (("convergence_loglog", "sweep.csv"),
                       ("entropy_decay", "entropy.csv"),
                       ("residual_trace", "conservation.csv")):
        spec = FigureSpec(input_csv=DATA / name, kind=kind,
                          output_image=tmp_path / f"{kind}.png")
        sidecar = plot(spec)
        assert (tmp_path / f"{kind}.png").stat().st_size > 0
        assert sidecar.read_text().strip()


def test_cli_round_trip(tmp_path, capsys):
    from sweep_plots.cli import main

    csv = synthetic_sweep_csv(tmp_path / "sweep.csv", [0.4, 0.2, 0.1], [0.5],
                              lambda eps: eps)
    code = main(["convergence_loglog", "--in", str(csv),
                 "--out", str(tmp_path / "out.png")])
    assert code == 0
    assert "wrote" in capsys.readouterr().out
    code = main(["entropy_decay", "--in", str(csv),
                 "--out", str(tmp_path / "x.png")])
    assert code == 2


def test_secondary_acceptance(tmp_path):
    # slope 1.00 +/- 0.01 on synthetic metric proportional to eps, and all
    # three figure kinds render from a real sweep without error
    csv = synthetic_sweep_csv(tmp_path / "sweep.csv", [0.4, 0.2, 0.1, 0.05],
                              [0.25, 0.5, 1.0], lambda eps: 0.8 * eps)
    sidecar = plot(FigureSpec(input_csv=csv, kind="convergence_loglog",
                              output_image=tmp_path / "conv.png"))
    slopes = [float(l.split()[-1]) for l in sidecar.read_text().splitlines()
              if "slope" in l and "not_fitted" not in l]
    ok = all(abs(s - 1.0) <= 0.01 for s in slopes)
    rendered = []
    for kind, name in (("convergence_loglog", "sweep.csv"),
                       ("entropy_decay", "entropy.csv"),
                       ("residual_trace", "conservation.csv")):
        plot(FigureSpec(input_csv=DATA / name, kind=kind,
                        output_image=tmp_path / f"acc_{kind}.png"))
        rendered.append((tmp_path / f"acc_{kind}.png").exists())
    print(f"\nACCEPTANCE {'PASS' if ok and all(rendered) else 'FAIL'} - plots: "
          f"synthetic slopes {slopes}; rendered {sum(rendered)}/3 figure kinds")
    assert ok and all(rendered)
