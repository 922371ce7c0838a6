"""Environment interface: stochastic demand generator plus an expected-demand oracle."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
from scipy import stats

from ..core import Action, DemandVector, DimensionError, ParameterError


class Environment(ABC):
    """A sequence of demand distributions fixed before the run starts.

    ``oracle_mean`` gives the expected demand of one market as a function of
    that market's cost and the common price.  Policies never call it; the
    harness uses it to compute the hindsight optimum.
    """

    name = "environment"
    stationary = True

    def __init__(self, n: int):
        if int(n) != n or n < 1:
            raise ParameterError(f"market count n must be a positive integer, got {n}")
        self.n = int(n)

    @abstractmethod
    def oracle_mean(self, t, i, c, p):
        """Expected demand of market ``i`` at round ``t``; broadcasts over ``c`` and ``p``."""

    @abstractmethod
    def sample(self, t: int, action: Action, rng) -> DemandVector:
        """Draw realized demands for round ``t`` (1-based)."""

    def expected_demand_sum(self, i, c, p, weights):
        """``sum_t weights[t-1] * oracle_mean(t, i, c, p)`` over rounds ``1..len(weights)``."""
        weights = np.asarray(weights, dtype=np.float64)
        if self.stationary:
            return weights.sum() * self.oracle_mean(1, i, c, p)
        total = 0.0
        for t, w in enumerate(weights, start=1):
            if w != 0.0:
                total = total + w * self.oracle_mean(t, i, c, p)
        return total

    def _check(self, action):
        if action.n != self.n:
            raise DimensionError(f"action has {action.n} markets, environment has {self.n}")

    def describe(self) -> dict:
        return {"kind": self.name, "n": self.n}


def _per_market(value, n, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise DimensionError(f"{name} must be a scalar or have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} must be finite")
    return arr


class MeanFunctionEnvironment(Environment):
    """Stationary environment defined by a mean-demand function per market.

    ``noise`` is ``"bernoulli"`` (demand in {0, 1} with the given mean) or
    ``"gaussian"`` (mean plus Gaussian noise truncated symmetrically so that
    the demand stays in [0, 1] and the mean is preserved).
    """

    def __init__(self, n, noise="bernoulli", noise_scale=0.1):
        super().__init__(n)
        if noise not in ("bernoulli", "gaussian"):
            raise ParameterError(f"unknown noise model {noise!r}")
        self.noise = noise
        self.noise_scale = float(noise_scale)
        if noise == "gaussian" and not self.noise_scale > 0:
            raise ParameterError("gaussian noise needs a positive noise_scale")

    @abstractmethod
    def mean(self, i, c, p):
        ...

    def oracle_mean(self, t, i, c, p):
        return self.mean(i, c, p)

    def sample(self, t, action, rng):
        self._check(action)
        means = np.array([self.mean(i, action.costs[i], action.price) for i in range(self.n)])
        return DemandVector(draw_demands(means, rng, self.noise, self.noise_scale))

    def describe(self):
        return {**super().describe(), "noise": self.noise}


def draw_demands(means, rng, noise="bernoulli", noise_scale=0.1):
    means = np.asarray(means, dtype=np.float64)
    if noise == "bernoulli":
        return (rng.random(means.shape) < means).astype(np.float64)
    half = np.minimum(means, 1.0 - means)
    out = means.copy()
    live = half > 0
    if np.any(live):
        bound = half[live] / noise_scale
        z = stats.truncnorm.rvs(-bound, bound, random_state=rng)
        out[live] = np.clip(means[live] + noise_scale * z, 0.0, 1.0)
    return out
