"""Residual history of plain Newton from a perturbed stationary wave, with observed orders."""

import argparse

import numpy as np

from abcdwaves.verification import newton_order_history


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--amplitude", type=float, default=1e-3)
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--iterations", type=int, default=4)
    args = ap.parse_args()
    hist = newton_order_history(n=args.n, amplitude=args.amplitude, iterations=args.iterations)
    for k, r in enumerate(hist):
        order = np.log(r) / np.log(hist[k - 1]) if k else float("nan")
        print(f"k={k}  residual {r:.3e}  log r_k / log r_k-1 = {order:.3f}")
    eps = np.finfo(float).eps
    print(f"rounding floor ~ eps * max|D2| * |U| ~ {eps * 16 / 12 / (30 / (args.n - 1)) ** 2 * 2.1:.1e}")


if __name__ == "__main__":
    main()
