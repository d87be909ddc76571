"""Front nonexistence scans: slow G over a range of beta^2, fast obstruction over lam, thresholds."""

import math

import numpy as np

from abcdwaves.analysis import constant_states, fast_front_obstruction, slow_front_excluded, threshold_constants


def main():
    print("slow family: max G(z, t) on (0, 1/t^2)")
    for b2 in (0.1, 0.2, 0.25, 0.26, 0.27, 0.3, 0.5, 1.0):
        excluded, scan = slow_front_excluded(math.sqrt(b2))
        print(f"  beta^2 = {b2:5.3f}  t = {scan.t:.4f}  max G = {scan.max_G:+.4e}  excluded: {excluded}")
    for th in threshold_constants():
        print(f"  {th.name}: quoted {th.reported}, recomputed {th.recomputed:.6f}, within 1e-2: {th.agrees}")
    print("fast family: obstruction at the downstream state")
    for lam in np.linspace(1.0, 10.0, 10)[1:]:
        print(f"  lam = {lam:5.2f}  obstruction = {fast_front_obstruction(float(lam)):+.4e}")
    print("exact constant states:")
    for lam in (0.0, 0.3, 2.0):
        print(f"  lam = {lam}: " + ", ".join(f"({u:.4f}, {e:.4f})" for u, e in constant_states(lam)))


if __name__ == "__main__":
    main()
