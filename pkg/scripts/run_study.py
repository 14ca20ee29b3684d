"""Stochastic diffusion-limit study: eps scan of ensemble errors plus the frozen-field control.

    python3 scripts/run_study.py --members 200 --out results/study
"""
import argparse
import json

from qlvp.ensemble import EnsembleConfig, convergence_study, write_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="JSON ensemble config (defaults to the built-in benchmark)")
    ap.add_argument("--members", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out", default="results/study")
    args = ap.parse_args()
    cfg = EnsembleConfig.load(args.config) if args.config else EnsembleConfig()
    if args.members:
        cfg.members = args.members
    if args.workers:
        cfg.workers = args.workers
    report = convergence_study(cfg)
    write_study(args.out, cfg, report)
    for s in report.stats:
        print(f"eps={s.eps:<5g} L2 error={s.error_l2:.4e}  stderr={s.stderr_l2:.4e}  "
              f"overshoot={s.max_overshoot:.2e}  wall={s.wall_clock:.0f}s")
    print(f"slope={report.fit.slope:.3f}  strictly decreasing={report.strictly_decreasing}")
    print("budget", json.dumps(report.budget))
    o = report.obstruction
    print("obstruction flux", o.flux_l2.tolist(), f"slope={o.fit.slope:.3f}")


if __name__ == "__main__":
    main()
