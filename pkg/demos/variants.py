"""Run the three problem variants next to the core problem.

* subscription: customers stay with probability beta each round and keep
  paying the price they joined at, marketing spend is charged per cohort.
* promo: an exogenous arrival mass r_t scales each round's profit.
* A/B: each market picks one of M marketing alternatives with fixed costs.

    python demos/variants.py
"""

import numpy as np

from profitbandit.harness import RunConfig, run
from profitbandit.variants import SubscriptionConfig, SubscriptionLedger
from profitbandit.core import Action, DemandVector

T = 2048


def ledger_walkthrough():
    cfg = SubscriptionConfig(betas=(0.5,), T=4)
    ledger = SubscriptionLedger(cfg)
    for price, cost, demand in ((0.8, 0.1, 0.5), (0.6, 0.0, 0.7), (0.6, 0.2, 0.9), (0.4, 0.0, 0.2)):
        ledger.record(Action(costs=np.array([cost]), price=price), DemandVector(np.array([demand])))
        print(f"  price {price:.1f}: active {ledger.active[0]:.3f}, revenue rate {ledger.revenue_rate[0]:.3f}, "
              f"cumulative profit {ledger.cumulative_profit[0]:.3f}")


def main():
    env = {"kind": "linear_monotone", "a": 0.5, "b": 0.5}
    variants = {
        "core": {"kind": "core"},
        "subscription": {"kind": "subscription", "betas": [0.5, 0.8]},
        "promo": {"kind": "promo", "r_range": [0.2, 1.0], "seed": 3},
    }
    for name, variant in variants.items():
        res = run(RunConfig(algo="alg1", env=env, n=2, T=T, seeds=tuple(range(6)), variant=variant))
        print(f"{name:13s} OPT {res.opt:9.2f}  profit {res.profits.mean():9.2f}  regret/OPT {res.regret / res.opt:.3f}")

    ab = RunConfig(algo="alg1", env={"kind": "alternatives", "lifts": [[0.3, 0.9, 1.0], [0.4, 1.0, 0.8]]},
                   n=2, T=T, seeds=tuple(range(6)), variant={"kind": "ab", "M": 3, "costs": [0.0, 0.05, 0.2]})
    res = run(ab)
    print(f"{'A/B':13s} OPT {res.opt:9.2f}  profit {res.profits.mean():9.2f}  regret/OPT {res.regret / res.opt:.3f}"
          f"  (gamma {res.params.gamma:.5f})")

    print("\nsubscription ledger, one market, beta = 0.5")
    ledger_walkthrough()


if __name__ == "__main__":
    main()
