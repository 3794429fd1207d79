"""Replicated simulation experiments: solve, sample, estimate, score, tabulate."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bandwidth import GLConfig
from .eigensolve import EigenPair, ModelSpec, read_keyvalue, solve_eigenpair
from .kernels import grid_template
from .numgrid import GridFunction, Interval, derivative, resample
from .pipeline import relative_error, run_pipeline
from .sampling import rejection_sample

log = logging.getLogger(__name__)

ROW_FIELDS = ["n", "rep", "seed", "err_N", "err_D", "err_H", "err_B",
              "h_hat", "h_tilde", "kappa_hat"]
STAT_FIELDS = ROW_FIELDS[3:]
MAX_FAILURE_FRACTION = 0.10


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    g: str = "one"
    B: str = "one"
    kappa: float = 1.0
    x_max: float = 4.0               # simulation/estimation domain [0, x_max]
    n_values: list = field(default_factory=lambda: [1000])
    replications: int = 50
    master_seed: int = 20240101
    gl: GLConfig = field(default_factory=GLConfig)
    k: int | str = "n"
    T: float = 4.0
    error_window: Interval = field(default_factory=lambda: Interval(0.5, 2.5))
    output_dir: Path | None = None
    eigen_nodes: int = 2001
    grid_nodes: int = 1001

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.n_values:
            raise ValueError("n_values is empty")
        if self.T > self.x_max:
            raise ValueError("T must not exceed x_max")

    def k_for(self, n: int) -> int:
        return n if self.k == "n" else int(self.k)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Read a flat ``key = value`` file (``#`` starts a comment)."""
        kv = read_keyvalue(path)
        cfg = cls()
        gl = {}
        for key, value in kv.items():
            if key in ("g", "B"):
                setattr(cfg, key, value)
            elif key in ("kappa", "x_max", "T"):
                setattr(cfg, key, float(value))
            elif key in ("replications", "master_seed", "eigen_nodes", "grid_nodes"):
                setattr(cfg, key, int(value))
            elif key == "n_values":
                cfg.n_values = [int(float(v)) for v in value.split(",") if v.strip()]
            elif key == "k":
                cfg.k = value if value == "n" else int(value)
            elif key == "error_window":
                a, b = (float(v) for v in value.split(","))
                cfg.error_window = Interval(a, b)
            elif key == "output_dir":
                cfg.output_dir = Path(value)
            elif key in ("epsilon", "epsilon_tilde", "c", "g_sup"):
                gl[key] = float(value)
            else:
                raise ValueError(f"{path}: unknown key {key!r}")
        cfg.gl = replace(cfg.gl, **gl)
        cfg.__post_init__()
        return cfg


@dataclass
class Truth:
    N: GridFunction
    D: GridFunction
    H: GridFunction
    B: GridFunction


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    lam: float
    rows: list
    curves: dict = field(default_factory=dict)     # n -> {name: (x, truth, estimate)}

    def ok_rows(self, n=None) -> list:
        return [r for r in self.rows if not r.get("error") and (n is None or r["n"] == n)]

    def failures(self, n=None) -> int:
        return sum(1 for r in self.rows if r.get("error") and (n is None or r["n"] == n))

    def aggregates(self) -> list:
        out = []
        for n in sorted({r["n"] for r in self.rows}):
            ok = self.ok_rows(n)
            agg = {"n": n, "n_pow": n ** -0.2, "count": len(ok), "failures": self.failures(n)}
            for f in STAT_FIELDS:
                vals = np.array([r[f] for r in ok], dtype=float)
                agg[f"{f}_mean"] = float(vals.mean()) if vals.size else math.nan
                # unbiased (divisor R - 1)
                agg[f"{f}_var"] = float(vals.var(ddof=1)) if vals.size > 1 else math.nan
            out.append(agg)
        return out


def replication_seed(master_seed: int, n: int, rep: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(n), int(rep)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def build_truth(cfg: ExperimentConfig, pair: EigenPair, model: ModelSpec) -> Truth:
    grid = grid_template(0.0, cfg.x_max, cfg.grid_nodes)
    x = grid.x
    N = resample(pair.N, 0.0, cfg.x_max, cfg.grid_nodes)
    gN = pair.N.with_values(model.g(pair.N.x) * pair.N.values)
    D = resample(derivative(gN), 0.0, cfg.x_max, cfg.grid_nodes)
    return Truth(N=N, D=D, H=grid.with_values(model.B(x) * N.values), B=grid.with_values(model.B(x)))


def _replication(args):
    cfg, pair, model, truth, n, rep, keep_curves = args
    seed = replication_seed(cfg.master_seed, n, rep)
    row = {"n": n, "rep": rep, "seed": seed}
    try:
        sample = rejection_sample(pair.N, n, seed)
        grid = grid_template(0.0, cfg.x_max, cfg.grid_nodes)
        res = run_pipeline(sample, model.g, pair.lam, cfg.gl, cfg.k_for(n), cfg.T, grid)
        full = Interval(0.0, cfg.T)
        row.update(
            err_N=relative_error(res.N_hat, truth.N, full),
            err_D=relative_error(res.D_hat, truth.D, full),
            err_H=relative_error(res.H_hat, truth.H, full),
            err_B=relative_error(res.B_tilde, truth.B, cfg.error_window),
            h_hat=res.h_hat, h_tilde=res.h_tilde, kappa_hat=res.kappa_hat,
            extremal=bool(res.diagnostics["h_hat_extremal"] or res.diagnostics["h_tilde_extremal"]),
        )
        curves = None
        if keep_curves:
            x = grid.x
            curves = {
                "N": (x, truth.N.values, res.N_hat.values),
                "D": (x, truth.D.values, res.D_hat.values),
                "H": (x, truth.H.values, res.H_hat.on_grid(grid).values),
                "B": (x, truth.B.values, res.B_tilde.values),
            }
        return row, curves
    except Exception as exc:  # recorded per row, excluded from aggregates
        row.update({f: math.nan for f in STAT_FIELDS})
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row, None


def worker_count() -> int:
    raw = os.environ.get("DIVRATE_THREADS")
    if not raw:
        return 1
    return max(1, int(raw))


def run_experiment(cfg: ExperimentConfig, pair: EigenPair | None = None,
                   workers: int | None = None) -> ExperimentReport:
    """Solve the direct problem once, then run every ``(n, rep)`` replication.

    Replications are independent tasks (seeded from ``(master_seed, n, rep)``)
    and may run in a process pool of ``workers`` (default ``DIVRATE_THREADS``,
    else 1); rows come back sorted by ``(n, rep)``.
    """
    model = ModelSpec(cfg.g, cfg.B, cfg.kappa, cfg.x_max)
    if pair is None:
        pair = solve_eigenpair(model, cfg.eigen_nodes)
    model = replace(model, x_max=pair.N.x_max)
    truth = build_truth(cfg, pair, model)
    tasks = [(cfg, pair, model, truth, n, rep, rep == 0)
             for n in cfg.n_values for rep in range(cfg.replications)]
    workers = workers or worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replication, tasks))
    else:
        results = [_replication(t) for t in tasks]
    results.sort(key=lambda rc: (rc[0]["n"], rc[0]["rep"]))
    rows = [r for r, _ in results]
    curves = {r["n"]: c for r, c in results if c is not None}
    report = ExperimentReport(cfg, pair.lam, rows, curves)
    for n in cfg.n_values:
        bad = report.failures(n)
        if bad:
            log.warning("n=%d: %d of %d replications failed", n, bad, cfg.replications)
    if report.failures() > MAX_FAILURE_FRACTION * len(rows):
        raise ExperimentError(f"{report.failures()} of {len(rows)} replications failed", report)
    return report


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: list, rows) -> None:
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_report(report: ExperimentReport, out_dir) -> list:
    """Write ``rows.csv``, ``aggregates.csv`` and per-``n`` curve files; return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / "rows.csv"
    _write_csv(path, ROW_FIELDS, ([r[f] for f in ROW_FIELDS] for r in report.rows))
    written.append(path)

    aggs = report.aggregates()
    agg_fields = ["n", "n_pow", "count", "failures"] + [
        f"{f}_{s}" for f in STAT_FIELDS for s in ("mean", "var")]
    path = out_dir / "aggregates.csv"
    _write_csv(path, agg_fields, ([a[f] for f in agg_fields] for a in aggs))
    written.append(path)

    failed = [r for r in report.rows if r.get("error")]
    if failed:
        path = out_dir / "failures.csv"
        _write_csv(path, ["n", "rep", "seed", "error"],
                   ([r["n"], r["rep"], r["seed"], r["error"]] for r in failed))
        written.append(path)

    for n, curves in sorted(report.curves.items()):
        for name, (x, truth, est) in curves.items():
            path = out_dir / f"curve_{name}_n{n}.csv"
            _write_csv(path, ["x", "truth", "estimate"], zip(x, truth, est))
            written.append(path)
    return written
