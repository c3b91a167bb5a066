"""Two-basis phase-error bound: analytic vertex versus grid search.

    python3 scripts/m2_bound_table.py --step 1e-3
"""

import argparse
import math
import time

from qkd_rotsym import analysis


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=1e-3)
    a = ap.parse_args(argv)
    print(f"{'theta':>7} {'e_b':>8} {'e_p_max':>9} {'oracle':>9} {'|diff|':>9} {'ai2':>7}")
    worst = 0.0
    start = time.perf_counter()
    for theta in (0.4, math.pi / 4, 1.0, 1.3):
        A = analysis.m2_bound(theta, 0.0).A
        for e_b in (0.0, 0.01, 0.05, 0.1, A / 2, 0.9 * A, A):
            sol = analysis.m2_bound(theta, e_b)
            grid = analysis.m2_bound_oracle(theta, e_b, a.step)
            worst = max(worst, abs(sol.e_p_max - grid))
            print(f"{theta:7.4f} {e_b:8.5f} {sol.e_p_max:9.6f} {grid:9.6f} "
                  f"{abs(sol.e_p_max - grid):9.2e} {sol.maximizer_ai2:7.4f}")
    print(f"max |diff| = {worst:.2e} at step {a.step} ({time.perf_counter() - start:.1f} s)")


if __name__ == "__main__":
    main()
