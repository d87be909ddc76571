"""Trace the slow branch for one beta and print a table of the accepted points."""

import argparse

from abcdwaves.continuation import StepSettings, continue_slow


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--L", type=float, default=None)
    ap.add_argument("--n", type=int, default=None)
    args = ap.parse_args()
    br = continue_slow(args.beta, settings=StepSettings(half_length=args.L, n=args.n))
    print(f"{'lam':>10} {'u(0)':>12} {'eta(0)':>12} {'gap':>10} {'N':>10}")
    for p in br.points:
        d = p.diagnostics
        print(f"{p.param:10.6f} {d.u0:12.8f} {d.eta0:12.8f} {d.ellipticity_gap:10.3e} {d.blowup_N:10.3e}")
    print(f"lam* = {br.info['lambda_star']:.6f}; termination: {br.termination.reason.value} ({br.termination.detail})")


if __name__ == "__main__":
    main()
