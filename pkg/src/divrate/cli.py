"""Command-line entry point ``divrate`` with subcommands solve, sample, estimate and bench."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bandwidth import GLConfig
from .eigensolve import EigenPair, ModelSpec, moment_identities, solve_eigenpair
from .harness import ExperimentConfig, ExperimentError, emit_report, run_experiment
from .kernels import grid_template
from .models import resolve_rate
from .numgrid import Interval, derivative, resample, write_grid_csv
from .pipeline import relative_error, run_pipeline
from .sampling import SizeSample, rejection_sample

log = logging.getLogger("divrate")


def _cmd_solve(args) -> int:
    model = ModelSpec(args.g, args.B, args.kappa, args.xmax)
    pair = solve_eigenpair(model, args.nodes)
    pair.to_csv(args.out)
    ids = moment_identities(pair, replace_xmax(model, pair))
    print(f"lambda={pair.lam!r}")
    print(f"x_max={pair.N.x_max!r}")
    print(f"identity_mass={ids['mass']:.3e}")
    print(f"identity_moment={ids['moment']:.3e}")
    return 0


def replace_xmax(model: ModelSpec, pair: EigenPair) -> ModelSpec:
    return ModelSpec(model.g, model.B, model.kappa, pair.N.x_max)


def _cmd_sample(args) -> int:
    pair = EigenPair.from_csv(args.pair)
    sample = rejection_sample(pair.N, args.n, args.seed)
    sample.to_csv(args.out)
    print(f"n={sample.n}")
    print(f"proposals={sample.proposals}")
    return 0


def _cmd_estimate(args) -> int:
    sample = SizeSample.from_csv(args.sample)
    g = resolve_rate(args.g)
    grid = grid_template(0.0, max(args.T, 4.0), args.grid_nodes)
    cfg = GLConfig(epsilon=args.epsilon, epsilon_tilde=args.epsilon_tilde)
    k = sample.n if args.k is None else args.k
    res = run_pipeline(sample, g, args.lam, cfg, k, args.T, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_grid_csv(res.N_hat, out / "N_hat.csv")
    write_grid_csv(res.D_hat, out / "D_hat.csv")
    res.H_hat.to_csv(out / "H_hat.csv")
    write_grid_csv(res.B_tilde, out / "B_tilde.csv")
    summary = res.summary()
    if args.pair:
        pair = EigenPair.from_csv(args.pair)
        N = resample(pair.N, grid.x_min, grid.x_max, grid.m)
        gN = pair.N.with_values(g(pair.N.x) * pair.N.values)
        D = resample(derivative(gN), grid.x_min, grid.x_max, grid.m)
        full = Interval(0.0, args.T)
        summary["err_N"] = relative_error(res.N_hat, N, full)
        summary["err_D"] = relative_error(res.D_hat, D, full)
        if args.B:
            B = grid.with_values(resolve_rate(args.B)(grid.x))
            summary["err_H"] = relative_error(res.H_hat, B * N, full)
            window = Interval(*args.window)
            summary["err_B"] = relative_error(res.B_tilde, B, window)
    text = "".join(f"{k}={v!r}\n" if isinstance(v, float) else f"{k}={v}\n"
                   for k, v in summary.items())
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def _cmd_bench(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    out = Path(args.out) if args.out else cfg.output_dir or Path("bench_out")
    try:
        report = run_experiment(cfg)
    except ExperimentError as exc:
        report = exc.args[1] if len(exc.args) > 1 else None
        if report is not None:
            emit_report(report, out)
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    emit_report(report, out)
    for agg in report.aggregates():
        print(f"n={agg['n']} reps={agg['count']} failures={agg['failures']} "
              f"err_N={agg['err_N_mean']:.4f} err_D={agg['err_D_mean']:.4f} "
              f"err_H={agg['err_H_mean']:.4f} err_B={agg['err_B_mean']:.4f} "
              f"h_hat={agg['h_hat_mean']:.4f} h_tilde={agg['h_tilde_mean']:.4f}")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="divrate", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve the direct eigenproblem")
    s.add_argument("--g", required=True, help="growth rate: name or CSV file")
    s.add_argument("--B", required=True, help="division rate: name or CSV file")
    s.add_argument("--kappa", type=float, default=1.0)
    s.add_argument("--xmax", type=float, default=4.0)
    s.add_argument("--nodes", type=int, default=2001)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_solve)

    s = sub.add_parser("sample", help="draw a size sample from a solved profile")
    s.add_argument("--pair", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sample)

    s = sub.add_parser("estimate", help="estimate B N and B from a sample")
    s.add_argument("--sample", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--T", type=float, default=4.0)
    s.add_argument("--k", type=int, default=None, help="cells (default: sample size)")
    s.add_argument("--out", required=True)
    s.add_argument("--pair", help="true profile, enables error reporting")
    s.add_argument("--B", help="true division rate, enables err_H and err_B")
    s.add_argument("--window", type=float, nargs=2, default=(0.5, 2.5))
    s.add_argument("--epsilon", type=float, default=0.1)
    s.add_argument("--epsilon-tilde", type=float, default=0.1)
    s.add_argument("--grid-nodes", type=int, default=1001)
    s.set_defaults(func=_cmd_estimate)

    s = sub.add_parser("bench", help="run a replicated experiment from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (overrides output_dir)")
    s.set_defaults(func=_cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
