"""Inspect the hard pricing instances with a single profitable grid pair.

The baseline instance earns zero expected profit everywhere on its grid
and loses money off it.  An alternative instance adds a small bump that
makes a single grid pair profitable.  The script checks the structural
properties for one alternative and prints a coarse profit map.

    python demos/lower_bound.py
"""

import numpy as np

from profitbandit.environments import LowerBoundEnvironment, verify_lowerbound
from profitbandit.environments.lowerbound import LowerBoundGrids, kl_sum

K = 20
BUMP = (0.4, 0.6)


def profit_map(env, n=11):
    axis = np.linspace(0, 1, n)
    cc, pp = np.meshgrid(axis, axis, indexing="ij")
    return axis, env.expected_profit(cc, pp)


def main():
    grids = LowerBoundGrids(K)
    print(f"K={K}: eps={grids.epsilon}, |C|={len(grids.C)}, |P|={len(grids.P)}, |S|={len(grids.S)}")

    for bump in (None, BUMP):
        checks = verify_lowerbound(K, bump, probes=101)
        label = "baseline" if bump is None else f"alternative {bump}"
        print(f"\n{label}")
        for name, check in checks.items():
            print(f"  {'ok  ' if check['passed'] else 'FAIL'} {name}")
        off = checks["item4_negative_off_grid"]
        if not off["passed"]:
            print(f"       off-grid probes at or above zero: {off['violations_zero_cost']} with zero spend, "
                  f"{off['violations_in_bump_window']} inside the bump, {off['violations_elsewhere']} elsewhere")

    env = LowerBoundEnvironment(1, K, BUMP)
    print(f"\nprofit at the bump: {float(env.expected_profit(*BUMP)):.4f} (floor eps/20 = {grids.epsilon / 20})")
    worst = max(kl_sum(c, p, grids.epsilon) for c, p in grids.S_values())
    print(f"largest KL sum over S: {worst:.5f} <= 54 eps^2 = {54 * grids.epsilon ** 2:.5f}")

    axis, prof = profit_map(env)
    print("\nexpected profit, rows = spend, columns = price")
    print("       " + " ".join(f"{p:6.1f}" for p in axis))
    for c, row in zip(axis, prof):
        print(f"{c:6.1f} " + " ".join(f"{v:6.2f}" for v in row))


if __name__ == "__main__":
    main()
