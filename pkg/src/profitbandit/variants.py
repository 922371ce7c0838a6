"""Reductions of the subscription, promotional-credit and A/B-test problems to the core policies.

Each variant is a *problem* object: it turns a round's action and demands
into the loss the policy sees, reports the profit the firm actually
realizes, and knows how to compute its own hindsight optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionError,
    NormalizedLoss,
    ParameterError,
    ProfitBreakdown,
    RangeError,
    compute_profit,
    normalize_loss,
)
from .policy_monotonic import DecomposedExp3


class CoreProblem:
    """The plain targeted-marketing problem."""

    name = "core"

    def fresh(self):
        return self

    def loss(self, t, action, demands) -> NormalizedLoss:
        return normalize_loss(compute_profit(action, demands))

    def record(self, t, action, demands, loss) -> float:
        """Profit actually earned in round ``t``."""
        return compute_profit(action, demands).total

    def expected_profit(self, env, t, action) -> float:
        means = np.array([env.oracle_mean(t, i, c, action.price) for i, c in enumerate(action.costs)])
        return float(np.sum(action.price * means - action.costs))

    def revenue_weights(self, T, n):
        w = np.ones((n, T))
        return w, w.sum(axis=1)

    def describe(self):
        return {"variant": self.name}


# --- subscription --------------------------------------------------------

@dataclass(frozen=True)
class SubscriptionConfig:
    betas: tuple
    T: int

    def __post_init__(self):
        betas = tuple(float(b) for b in np.atleast_1d(self.betas))
        if any(not 0.0 <= b < 1.0 for b in betas):
            raise ParameterError(f"every retention factor must lie in [0, 1), got {betas}")
        if int(self.T) != self.T or self.T < 1:
            raise ParameterError(f"horizon must be a positive integer, got {self.T}")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "T", int(self.T))

    @property
    def beta_array(self):
        return np.asarray(self.betas)


def telescoped_profit(config: SubscriptionConfig, t, action, demands) -> ProfitBreakdown:
    """Round-``t`` profit with the remaining lifetime value of round-``t`` joiners folded in."""
    if not 1 <= t <= config.T:
        raise RangeError(f"round {t} outside 1..{config.T}")
    betas = config.beta_array
    if betas.shape[0] != action.n or demands.n != action.n:
        raise DimensionError("betas, action and demands must cover the same markets")
    factor = 1.0 - betas ** (config.T - t + 1)
    per_market = factor * action.price * demands.demands - action.costs
    return ProfitBreakdown(per_market=per_market, total=float(per_market.sum()))


def subscription_loss(config: SubscriptionConfig, t, action, demands) -> NormalizedLoss:
    return normalize_loss(telescoped_profit(config, t, action, demands))


class SubscriptionLedger:
    """Tracks active users and the realized profit of a subscription service.

    Each cohort keeps paying the price at which it joined; a fraction
    ``beta`` of the active users stays on each round and marketing cost
    ``c`` corresponds to an expenditure of ``c / (1 - beta)``.
    """

    def __init__(self, config: SubscriptionConfig):
        self.config = config
        n = len(config.betas)
        self.active = np.zeros(n)
        self.revenue_rate = np.zeros(n)
        self.cumulative_profit = np.zeros(n)

    def record(self, action, demands):
        betas = self.config.beta_array
        self.active = betas * self.active + demands.demands
        self.revenue_rate = betas * self.revenue_rate + action.price * demands.demands
        profit = self.revenue_rate - action.costs / (1.0 - betas)
        self.cumulative_profit += profit
        return profit


class SubscriptionProblem(CoreProblem):
    name = "subscription"

    def __init__(self, config: SubscriptionConfig):
        self.config = config
        self.ledger = SubscriptionLedger(config)

    def fresh(self):
        return SubscriptionProblem(self.config)

    def loss(self, t, action, demands):
        return subscription_loss(self.config, t, action, demands)

    def record(self, t, action, demands, loss):
        return float(self.ledger.record(action, demands).sum())

    def expected_profit(self, env, t, action):
        # expectation of the realized profit needs the whole past; only the
        # telescoped per-round contribution is available in closed form
        betas = self.config.beta_array
        means = np.array([env.oracle_mean(t, i, c, action.price) for i, c in enumerate(action.costs)])
        factor = (1.0 - betas ** (self.config.T - t + 1)) / (1.0 - betas)
        return float(np.sum(factor * action.price * means - action.costs / (1.0 - betas)))

    def revenue_weights(self, T, n):
        betas = self.config.beta_array
        t = np.arange(1, T + 1)
        w = (1.0 - betas[:, None] ** (T - t + 1)[None, :]) / (1.0 - betas[:, None])
        return w, T / (1.0 - betas)

    def regret_scale(self):
        """Factor ``1 / (1 - max beta)`` by which the regret guarantee is inflated."""
        return 1.0 / (1.0 - max(self.config.betas))

    def describe(self):
        return {"variant": self.name, "betas": list(self.config.betas), "T": self.config.T}


# --- promotional credit --------------------------------------------------

@dataclass(frozen=True)
class PromoConfig:
    r_sequence: np.ndarray  # shape (T, n), arrival mass per round and market

    def __post_init__(self):
        r = np.asarray(self.r_sequence, dtype=np.float64)
        if r.ndim != 2:
            raise DimensionError("r_sequence must have shape (T, n)")
        if np.any(r < 0) or np.any(r > 1) or not np.all(np.isfinite(r)):
            raise RangeError("arrival masses must lie in [0, 1]")
        object.__setattr__(self, "r_sequence", r)

    def r_at(self, t):
        if not 1 <= t <= self.r_sequence.shape[0]:
            raise RangeError(f"no arrival mass given for round {t}")
        return self.r_sequence[t - 1]


def promo_loss(config: PromoConfig, t, action, demands) -> NormalizedLoss:
    r = config.r_at(t)
    base = compute_profit(action, demands)
    if r.shape != base.per_market.shape:
        raise DimensionError("arrival masses and markets disagree")
    per_market = r * base.per_market
    return normalize_loss(ProfitBreakdown(per_market=per_market, total=float(per_market.sum())))


class PromoProblem(CoreProblem):
    name = "promo"

    def __init__(self, config: PromoConfig):
        self.config = config

    def loss(self, t, action, demands):
        return promo_loss(self.config, t, action, demands)

    def record(self, t, action, demands, loss):
        return float(np.sum(self.config.r_at(t) * compute_profit(action, demands).per_market))

    def expected_profit(self, env, t, action):
        return float(np.sum(self.config.r_at(t) * (self._core_expected(env, t, action))))

    def _core_expected(self, env, t, action):
        means = np.array([env.oracle_mean(t, i, c, action.price) for i, c in enumerate(action.costs)])
        return action.price * means - action.costs

    def revenue_weights(self, T, n):
        r = self.config.r_sequence[:T].T
        if r.shape != (n, T):
            raise DimensionError(f"arrival masses cover {r.shape[1]} rounds of {r.shape[0]} markets, need {T} of {n}")
        return r, r.sum(axis=1)

    def describe(self):
        return {"variant": self.name, "rounds": int(self.config.r_sequence.shape[0])}


# --- profit-maximizing A/B test -----------------------------------------

@dataclass(frozen=True)
class ABAction:
    alternatives: tuple
    price: float

    @property
    def n(self):
        return len(self.alternatives)


@dataclass(frozen=True)
class ABConfig:
    M: int
    cost_schedule: np.ndarray  # shape (M,) or (T, M)
    K: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ParameterError(f"need at least one alternative, got M={self.M}")
        costs = np.asarray(self.cost_schedule, dtype=np.float64)
        if costs.shape[-1] != self.M or costs.ndim not in (1, 2):
            raise DimensionError(f"cost schedule must have shape (M,) or (T, M) with M={self.M}")
        if np.any(costs < 0) or np.any(costs > 1):
            raise RangeError("alternative costs must lie in [0, 1]")
        object.__setattr__(self, "cost_schedule", costs)
        if int(self.K) != self.K or self.K < 1:
            raise ParameterError(f"K must be a positive integer, got {self.K}")

    def costs_at(self, t):
        if self.cost_schedule.ndim == 1:
            return self.cost_schedule
        return self.cost_schedule[t - 1]


class ABPolicy(DecomposedExp3):
    """Decomposed EXP3 where each market picks one of ``M`` alternatives instead of a cost."""

    kind = "ab"

    def __init__(self, n, config: ABConfig, eta, gamma=None):
        if gamma is None:
            gamma = eta * math.sqrt(config.M / config.K)
        self.config = config
        super().__init__(n, config.K, eta, gamma, np.arange(config.M, dtype=np.float64))

    def sample_action(self, rng) -> ABAction:
        chosen = self.sample_indices(rng)
        return ABAction(alternatives=chosen.options, price=float(self.price_grid.points[chosen.price]))

    def to_dict(self):
        doc = super().to_dict()
        doc["params"]["M"] = self.config.M
        doc["params"]["cost_schedule"] = self.config.cost_schedule.tolist()
        return doc

    @classmethod
    def _blank_from_dict(cls, doc):
        p = doc["params"]
        cfg = ABConfig(M=p["M"], cost_schedule=np.asarray(p["cost_schedule"]), K=p["K"])
        return cls(p["n"], cfg, p["eta"], p["gamma"])


def ab_policy(n, config: ABConfig, eta, gamma=None) -> ABPolicy:
    return ABPolicy(n, config, eta, gamma)


class ABProblem(CoreProblem):
    name = "ab"

    def __init__(self, config: ABConfig):
        self.config = config

    def profit(self, t, action: ABAction, demands) -> ProfitBreakdown:
        costs = self.config.costs_at(t)[list(action.alternatives)]
        per_market = action.price * demands.demands - costs
        return ProfitBreakdown(per_market=per_market, total=float(per_market.sum()))

    def loss(self, t, action, demands):
        return normalize_loss(self.profit(t, action, demands))

    def record(self, t, action, demands, loss):
        return self.profit(t, action, demands).total

    def expected_profit(self, env, t, action):
        costs = self.config.costs_at(t)[list(action.alternatives)]
        means = np.array([env.oracle_mean(t, i, m, action.price) for i, m in enumerate(action.alternatives)])
        return float(np.sum(action.price * means - costs))

    def describe(self):
        return {"variant": self.name, "M": self.config.M}
