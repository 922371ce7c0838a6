"""Measure how regret grows with the horizon and fit a log-log slope.

Parameters are re-derived at every horizon from the default rates.
At these desk-scale horizons the learning rates are small, so the fitted
slopes sit well above the asymptotic exponents.  The ``constant`` knob
(``--constant`` on the CLI) scales K along with eta, and the extra arms
cost more than the faster rate gains at these horizons.

    python demos/regret_sweep.py
"""

from profitbandit.harness import RunConfig, sweep_T

HORIZONS = [256, 512, 1024, 2048, 4096]


def report(label, sweep):
    fit = sweep.fit
    print(f"\n{label}")
    for res in sweep.results:
        tuning = "" if res.params.eta is None else f"K={res.params.K:2d}  eta={res.params.eta:.5f}  "
        print(f"  T={res.config.T:5d}  {tuning}"
              f"regret={res.regret:8.2f} +- {res.se:6.2f}  regret/T={res.regret / res.config.T:.4f}")
    if fit.slope is None:
        print(f"  not enough usable points (excluded: {fit.excluded})")
    else:
        lo, hi = fit.ci()
        print(f"  slope {fit.slope:.3f}, 95% CI [{lo:.3f}, {hi:.3f}], excluded T: {fit.excluded}")


def main():
    env = {"kind": "sqrt_concave"}
    for algo, constant in (("alg1", 1.0), ("alg1", 4.0), ("alg2", 1.0), ("uniform", 1.0)):
        cfg = RunConfig(algo=algo, env=env, n=2, T=HORIZONS[0], seeds=tuple(range(6)), constant=constant,
                        overrides={"m": 64} if algo == "alg2" else {})
        report(f"{algo} (constant {constant})", sweep_T(cfg, HORIZONS))


if __name__ == "__main__":
    main()
