"""Solve the direct problem for the built-in models and tabulate N, gN and BN.

    python scripts/direct_problem.py [--out results/direct]
"""

import argparse
from pathlib import Path

import numpy as np

from divrate.eigensolve import ModelSpec, moment_identities, solve_eigenpair

MODELS = [("one", "one"), ("linear", "square"), ("one", "b2"), ("one", "b3")]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/direct")
    p.add_argument("--nodes", type=int, default=2001)
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(f"{'g':>7} {'B':>7} {'lambda':>12} {'x_max':>6} {'mass':>9} {'moment':>9}")
    for g, B in MODELS:
        pair = solve_eigenpair(ModelSpec(g, B), args.nodes)
        model = ModelSpec(g, B, 1.0, pair.N.x_max)
        ids = moment_identities(pair, model)
        pair.to_csv(out / f"pair_{g}_{B}.csv")
        x = pair.N.x
        np.savetxt(out / f"profiles_{g}_{B}.csv",
                   np.column_stack([x, pair.N.values, model.g(x) * pair.N.values,
                                    model.B(x) * pair.N.values]),
                   delimiter=",", header="x,N,gN,BN", comments="")
        print(f"{g:>7} {B:>7} {pair.lam:>12.8f} {pair.N.x_max:>6.2f} "
              f"{ids['mass']:>9.1e} {ids['moment']:>9.1e}")


if __name__ == "__main__":
    main()
