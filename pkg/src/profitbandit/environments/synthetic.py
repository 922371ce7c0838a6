"""Built-in demand families and nonstationary schedules."""

from __future__ import annotations

import numpy as np

from ..core import DimensionError, ParameterError
from ..core import DemandVector
from .base import Environment, MeanFunctionEnvironment, _per_market, draw_demands


class LinearMonotone(MeanFunctionEnvironment):
    """``clip(a*c + b*(1 - p) + base, 0, 1)``: non-decreasing in cost, non-increasing in price."""

    name = "linear_monotone"

    def __init__(self, n, a=1.0, b=1.0, base=0.0, **noise):
        super().__init__(n, **noise)
        self.a = _per_market(a, self.n, "a")
        self.b = _per_market(b, self.n, "b")
        self.base = _per_market(base, self.n, "base")
        if np.any(self.a < 0) or np.any(self.b < 0):
            raise ParameterError("linear monotone family needs a >= 0 and b >= 0")

    def mean(self, i, c, p):
        return np.clip(self.a[i] * np.asarray(c) + self.b[i] * (1.0 - np.asarray(p)) + self.base[i], 0.0, 1.0)

    def lipschitz(self):
        return float(np.max(self.a + self.b))

    def describe(self):
        return {**super().describe(), "a": self.a.tolist(), "b": self.b.tolist(), "base": self.base.tolist()}


class SqrtConcave(MeanFunctionEnvironment):
    """``scale * min(1, sqrt(c)) * (1 - p)``: concave in cost, non-increasing in price.

    With ``scale = 1`` a single market's expected profit peaks at 1/64,
    attained at ``p = 1/2`` and ``c = 1/64``.
    """

    name = "sqrt_concave"

    def __init__(self, n, scale=1.0, **noise):
        super().__init__(n, **noise)
        self.scale = _per_market(scale, self.n, "scale")
        if np.any(self.scale < 0) or np.any(self.scale > 1):
            raise ParameterError(f"scale must lie in [0, 1] to keep demand in range, got {self.scale}")

    def mean(self, i, c, p):
        return self.scale[i] * np.minimum(1.0, np.sqrt(np.asarray(c))) * (1.0 - np.asarray(p))

    def describe(self):
        return {**super().describe(), "scale": self.scale.tolist()}


class LogisticPrice(MeanFunctionEnvironment):
    """Logistic price response shifted or scaled by marketing.

    ``shape="monotone"``: ``sigmoid(k * (p0 + lift*c - p))``.
    ``shape="concave"``: ``(1 - exp(-lift*c)) / (1 - exp(-lift)) * sigmoid(k * (p0 - p))``.
    """

    name = "logistic_price"

    def __init__(self, n, k=10.0, p0=0.5, lift=0.3, shape="monotone", **noise):
        super().__init__(n, **noise)
        self.k = _per_market(k, self.n, "k")
        self.p0 = _per_market(p0, self.n, "p0")
        self.lift = _per_market(lift, self.n, "lift")
        if shape not in ("monotone", "concave"):
            raise ParameterError(f"unknown logistic shape {shape!r}")
        self.shape = shape
        if np.any(self.k < 0) or np.any(self.lift < 0):
            raise ParameterError("logistic family needs k >= 0 and lift >= 0")
        if shape == "concave" and np.any(self.lift == 0):
            raise ParameterError("concave logistic family needs lift > 0")

    def mean(self, i, c, p):
        c = np.asarray(c)
        p = np.asarray(p)
        if self.shape == "monotone":
            return 1.0 / (1.0 + np.exp(-self.k[i] * (self.p0[i] + self.lift[i] * c - p)))
        gain = -np.expm1(-self.lift[i] * c) / -np.expm1(-self.lift[i])
        return gain / (1.0 + np.exp(-self.k[i] * (self.p0[i] - p)))

    def describe(self):
        return {**super().describe(), "shape": self.shape, "k": self.k.tolist(),
                "p0": self.p0.tolist(), "lift": self.lift.tolist()}


class Schedule(Environment):
    """Oblivious nonstationary sequence: phase ``k`` runs from ``starts[k]`` up to the next start.

    The whole sequence is fixed at construction, so it cannot react to the
    learner.
    """

    name = "schedule"
    stationary = False

    def __init__(self, phases, starts):
        if len(phases) == 0 or len(phases) != len(starts):
            raise ParameterError("schedule needs one start round per phase")
        n = phases[0].n
        if any(ph.n != n for ph in phases):
            raise DimensionError("all phases must have the same market count")
        starts = [int(s) for s in starts]
        if starts[0] != 1 or any(b <= a for a, b in zip(starts, starts[1:])):
            raise ParameterError("phase starts must begin at 1 and strictly increase")
        super().__init__(n)
        self.phases = list(phases)
        self.starts = np.asarray(starts)

    @classmethod
    def random(cls, make_phase, T, n_phases, seed):
        """Draw phase switch rounds from ``seed``; ``make_phase(k, rng)`` builds phase ``k``."""
        rng = np.random.default_rng(seed)
        if n_phases < 1 or n_phases > T:
            raise ParameterError("need 1 <= n_phases <= T")
        cuts = np.sort(rng.choice(np.arange(2, T + 1), size=n_phases - 1, replace=False)) if n_phases > 1 else []
        phases = [make_phase(k, rng) for k in range(n_phases)]
        return cls(phases, [1, *[int(x) for x in cuts]])

    def phase_at(self, t):
        return self.phases[int(np.searchsorted(self.starts, t, side="right")) - 1]

    def oracle_mean(self, t, i, c, p):
        return self.phase_at(t).oracle_mean(t, i, c, p)

    def sample(self, t, action, rng):
        return self.phase_at(t).sample(t, action, rng)

    def expected_demand_sum(self, i, c, p, weights):
        weights = np.asarray(weights, dtype=np.float64)
        bounds = list(self.starts - 1) + [len(weights)]
        total = 0.0
        for k, phase in enumerate(self.phases):
            lo, hi = min(bounds[k], len(weights)), min(bounds[k + 1], len(weights))
            if hi > lo:
                total = total + phase.expected_demand_sum(i, c, p, weights[lo:hi])
        return total

    def describe(self):
        return {"kind": self.name, "n": self.n, "starts": self.starts.tolist(),
                "phases": [ph.describe() for ph in self.phases]}


class MarketingAlternatives(Environment):
    """Demand for A/B tests: market ``i`` under alternative ``m`` at price ``p`` has mean ``lift[i, m] * (1 - p)``.

    Actions carry alternative indices instead of costs (see
    :class:`profitbandit.variants.ABAction`).
    """

    name = "marketing_alternatives"

    def __init__(self, lifts, noise="bernoulli", noise_scale=0.1):
        lifts = np.asarray(lifts, dtype=np.float64)
        if lifts.ndim != 2:
            raise DimensionError("lifts must be an (n, M) array")
        super().__init__(lifts.shape[0])
        if np.any(lifts < 0) or np.any(lifts > 1):
            raise ParameterError("lifts must lie in [0, 1]")
        self.lifts = lifts
        self.M = lifts.shape[1]
        self.noise, self.noise_scale = noise, noise_scale

    def oracle_mean(self, t, i, m, p):
        return self.lifts[i, np.asarray(m, dtype=int)] * (1.0 - np.asarray(p))

    def sample(self, t, action, rng):
        if len(action.alternatives) != self.n:
            raise DimensionError(f"action has {len(action.alternatives)} markets, environment has {self.n}")
        means = np.array([self.oracle_mean(t, i, m, action.price) for i, m in enumerate(action.alternatives)])
        return DemandVector(draw_demands(means, rng, self.noise, self.noise_scale))

    def describe(self):
        return {"kind": self.name, "n": self.n, "lifts": self.lifts.tolist()}
