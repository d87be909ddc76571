"""Trace the fast branch in s at fixed speed and print the crest values."""

import argparse

from abcdwaves.continuation import continue_fast


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=1.5)
    ap.add_argument("--k", type=float, default=0.5)
    args = ap.parse_args()
    br = continue_fast(args.lam, args.k)
    print(f"{'s':>10} {'u(0)':>12} {'eta(0)':>12} {'eta bound':>12} {'lam-max u':>10}")
    for p in br.points:
        d = p.diagnostics
        print(f"{p.param:10.6f} {d.u0:12.8f} {d.eta0:12.8f} {d.eta_bound:12.8f} {d.stagnation_gap:10.3e}")
    print(f"s* = {br.info['s_star']:.6f}; arclength steps {br.info['arclength_steps']}; "
          f"termination: {br.termination.reason.value} ({br.termination.detail})")


if __name__ == "__main__":
    main()
