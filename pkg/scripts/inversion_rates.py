"""Error of the discrete dilation inverse against a known preimage, as k grows.

    python scripts/inversion_rates.py [--T 4]

Prints the L2 error, the stability bound T ||phi||_{W1} / sqrt(6k) and the
error ratio per fourfold increase of k.
"""

import argparse
import math

import numpy as np

from divrate.dilation import apply_L, cell_averages, invert_Lk, step_l2_distance, w1_norm
from divrate.numgrid import GridFunction


def bump(x, c=1.0, w=0.7):
    z = (x - c) / w
    out = np.zeros_like(x)
    inside = np.abs(z) < 1
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--T", type=float, default=4.0)
    p.add_argument("--nodes", type=int, default=16001)
    args = p.parse_args()
    psi = GridFunction.from_callable(bump, 0.0, args.T, args.nodes)
    phi = apply_L(psi)
    w1 = w1_norm(phi, args.T)
    prev = None
    print(f"{'k':>6} {'error':>10} {'bound':>10} {'ratio':>7}")
    for k in (16, 64, 256, 1024, 4096):
        err = step_l2_distance(invert_Lk(cell_averages(phi, args.T, k)), psi)
        ratio = f"{prev / err:7.2f}" if prev else " " * 7
        print(f"{k:>6} {err:>10.3e} {args.T * w1 / math.sqrt(6 * k):>10.3e} {ratio}")
        prev = err


if __name__ == "__main__":
    main()
