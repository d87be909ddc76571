"""Run the nine acceptance checks and print one PASS/FAIL line each."""

import sys

from abcdwaves.verification import run_all

if __name__ == "__main__":
    results = run_all(verbose=True)
    sys.exit(0 if all(r.passed for r in results) else 1)
