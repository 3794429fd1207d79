"""Run a replicated experiment from a config file and print a summary table.

    python scripts/run_table.py configs/unit_rates.cfg [--replications 10] [--out DIR]

Workers are capped by DIVRATE_THREADS.
"""

import argparse
import logging
from dataclasses import replace
from pathlib import Path

from divrate.harness import ExperimentConfig, emit_report, run_experiment

COLUMNS = ["err_N", "err_D", "err_H", "err_B", "h_hat", "h_tilde", "kappa_hat"]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--replications", type=int, help="override the config's replication count")
    p.add_argument("--out", help="output directory (default: the config's output_dir)")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    cfg = ExperimentConfig.from_file(args.config)
    if args.replications:
        cfg = replace(cfg, replications=args.replications)
    out = Path(args.out or cfg.output_dir or "results")
    report = run_experiment(cfg)
    emit_report(report, out)

    print(f"lambda = {report.lam:.8f}")
    print(f"{'n':>7} {'n^-1/5':>7} " + " ".join(f"{c:>10}" for c in COLUMNS))
    for a in report.aggregates():
        print(f"{a['n']:>7} {a['n_pow']:>7.3f} " + " ".join(f"{a[c + '_mean']:>10.4f}" for c in COLUMNS))
        print(f"{'var':>15} " + " ".join(f"{a[c + '_var']:>10.2e}" for c in COLUMNS))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
