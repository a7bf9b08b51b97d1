"""Command-line entry point: sweep, conservation, operators, validate-force."""
from __future__ import annotations

import argparse
import sys

from . import _accel, harness


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the YAML run configuration")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--threads", type=int, default=1,
                   help="compute threads (results are thread-count independent)")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="linboltz",
        description=("Discrete-velocity Boltzmann solver with admissible external "
                     "forces and entropy-based convergence diagnostics"),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("sweep", "epsilon sweep against the linearized reference run"),
        ("conservation", "moment-law and entropy-inequality suite"),
        ("operators", "collision-operator verification suite"),
        ("validate-force", "run the force admissibility validators"),
    ]:
        _add_common(sub.add_parser(name, help=help_text))
    args = parser.parse_args(argv)

    _accel.set_threads(args.threads)
    try:
        cfg = harness.load_config(args.config)
    except (harness.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "sweep":
            summary = harness.run_epsilon_sweep(cfg, args.out, progress=True)
            status = "PASS" if summary["pass"] else "FAIL"
            print(f"sweep: {status}; slopes per snapshot:")
            for t, s in summary["snapshots"].items():
                print(f"  t={t}: entropic={s['slope_entropic_metric']} "
                      f"l1={s['slope_l1_gap']} q={s['slope_q_gap']}")
        elif args.command == "conservation":
            summary = harness.run_conservation_suite(cfg, args.out)
            print(f"mass law max residual:     {summary['mass_law_max']:.3e}")
            print(f"momentum law max residual: {summary['momentum_law_max']:.3e}")
            print(f"energy law max residual:   {summary['energy_law_max']:.3e}")
            ent = summary["entropy"]
            print(f"entropy slack (dt):        {ent['final_slack_dt']:.3e}")
            print(f"entropy slack shrink:      {ent['slack_shrink_factor']:.2f}x")
        elif args.command == "operators":
            report = harness.run_operator_suite(cfg, args.out)
            for key in ("null_space_residuals", "self_adjointness_gap",
                        "quadratic_form_min", "classical_identity_gap",
                        "oracle_q_max_rel_gap", "oracle_L_max_rel_gap"):
                print(f"{key}: {report[key]}")
        else:
            payload = harness.run_force_validation(cfg, args.out)
            for check in ("orthogonal", "divergence_free", "square_integrable"):
                print(f"{check}: {'PASS' if payload[check] else 'FAIL'}")
            print(f"equilibrium residual: {payload['equilibrium_residual']:.3e}")
            return 0 if payload["admissible"] else 1
    except (harness.ConfigError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
