"""Learn a price and a marketing spend for one market.

The demand curve is ``sqrt(c) * (1 - p)``.  The best fixed choice is
``p = 1/2`` with spend ``c = 1/64``, worth 1/64 per round.  Both learners
start from uniform play, which spends heavily and loses money.  With the
default tuning a few thousand rounds only move the learners part of the
way: they lose less than uniform play, and the spend distributions lean
toward small values, but the price distribution is still broad.

    python demos/single_market.py
"""

import numpy as np

from profitbandit.harness import Episode, RunConfig, estimate_opt, run

T = 4096


def summarize_alg1(policy):
    prices = np.arange(policy.params.K + 1) / policy.params.K
    q = policy.price_probs
    best = int(np.argmax(q))
    costs = policy.cost_probs(0, best)
    print(f"  price distribution: {np.round(q, 3)}")
    print(f"  most likely price {prices[best]:.3f}, cost distribution there {np.round(costs, 3)}")


def main():
    opt = None
    for algo in ("alg1", "alg2", "uniform"):
        cfg = RunConfig(algo=algo, env={"kind": "sqrt_concave"}, n=1, T=T, seeds=tuple(range(8)))
        res = run(cfg)
        opt = res.opt
        print(f"{algo:8s} mean profit {res.profits.mean():8.2f}   regret {res.regret:8.2f} +- {res.se:.2f}")
    print(f"hindsight optimum over {T} rounds: {opt:.2f} (T/64 = {T / 64:.2f})")

    ep = Episode(RunConfig(algo="alg1", env={"kind": "sqrt_concave"}, n=1, T=T), seed=0).run()
    print("\nAlgorithm 1 state after one episode:")
    summarize_alg1(ep.policy)

    dense = estimate_opt(ep.env, T)
    print(f"\nfine-grid optimum: price {dense.price:.4f}, spend {dense.choices[0]:.4f}")


if __name__ == "__main__":
    main()
