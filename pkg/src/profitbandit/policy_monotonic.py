"""Decomposed exponential weights for monotonic demands.

One Hedge distribution over the price grid, and for every market and every
price one Hedge distribution over the cost grid.  Costs are sampled
conditionally on the sampled price, and both layers are updated with
importance-weighted loss estimates whose denominators are smoothed by the
bias-control parameter ``gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Action, NormalizedLoss, ParameterError, PoisonedStateError, make_price_grid
from .hedge import normalize_log, sample_index

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MonotonicParams:
    n: int
    K: int
    eta: float
    gamma: float | None = None  # defaults to eta

    def __post_init__(self):
        if self.gamma is None:
            object.__setattr__(self, "gamma", float(self.eta))
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"market count n must be a positive integer, got {self.n}")
        if int(self.K) != self.K or self.K < 1:
            raise ParameterError(f"K must be a positive integer, got {self.K}")
        if not self.eta > 0 or not np.isfinite(self.eta):
            raise ParameterError(f"learning rate eta must be positive, got {self.eta}")
        if not self.gamma > 0 or not np.isfinite(self.gamma):
            raise ParameterError(f"bias control gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class Chosen:
    """Grid indices sampled in the current round."""

    price: int
    options: tuple  # one option (cost) index per market


class DecomposedExp3:
    """Price-then-option exponential weights over finite option sets.

    ``option_values`` are the values each market chooses among; for the
    monotonic algorithm they are the cost grid ``I_K``.
    """

    kind = "decomposed"

    def __init__(self, n, K, eta, gamma, option_values, exploration_coef=None):
        self.n = int(n)
        self.K = int(K)
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.price_grid = make_price_grid(self.K)
        self.option_values = np.asarray(option_values, dtype=np.float64)
        n_prices = self.K + 1
        n_opts = self.option_values.shape[0]
        if exploration_coef is None:
            exploration_coef = self.eta * n_prices
        self.exploration_coef = float(exploration_coef)
        self.price_logweights = np.full(n_prices, -np.log(n_prices))
        self.cost_logweights = np.full((self.n, n_prices, n_opts), -np.log(n_opts))
        self._price_probs = np.exp(self.price_logweights)
        self._cost_probs = np.exp(self.cost_logweights)
        self.round = 1
        self.last = None
        self.poisoned = False

    # distributions -------------------------------------------------------
    @property
    def price_probs(self) -> np.ndarray:
        return self._price_probs

    def cost_probs(self, i, p_idx) -> np.ndarray:
        return self._cost_probs[i, p_idx]

    def set_price_logweights(self, logw):
        self.price_logweights = normalize_log(logw)
        self._price_probs = np.exp(self.price_logweights)

    # sampling ------------------------------------------------------------
    def sample_indices(self, rng) -> Chosen:
        p_idx = sample_index(self._price_probs, rng)
        opts = tuple(sample_index(self._cost_probs[i, p_idx], rng) for i in range(self.n))
        chosen = Chosen(price=p_idx, options=opts)
        self.last = chosen
        return chosen

    def sample_action(self, rng) -> Action:
        chosen = self.sample_indices(rng)
        costs = self.option_values[list(chosen.options)]
        return Action(costs=costs, price=self.price_grid.points[chosen.price])

    # estimators ----------------------------------------------------------
    def estimator_f(self, chosen: Chosen, losses: NormalizedLoss, i, c_idx, p_idx) -> float:
        if c_idx != chosen.options[i] or p_idx != chosen.price:
            return 0.0
        q_cost = self._cost_probs[i, chosen.price, chosen.options[i]]
        q_price = self._price_probs[chosen.price]
        return float(losses.per_market[i] / (q_cost * (q_price + self.gamma)))

    def estimator_h(self, chosen: Chosen, losses: NormalizedLoss, p_idx=None):
        """Price-layer estimate at ``p_idx``, or at every price when omitted."""
        q = self._price_probs
        explore = self.exploration_coef * (1.0 / self.gamma - 1.0 / (q + self.gamma))
        h = explore.copy()
        h[chosen.price] += losses.total / (self.n * (q[chosen.price] + self.gamma))
        if p_idx is None:
            return h
        return float(h[p_idx])

    # update --------------------------------------------------------------
    def update(self, chosen: Chosen, losses: NormalizedLoss):
        if self.poisoned:
            raise PoisonedStateError("policy state was poisoned by an earlier non-finite loss")
        per_market = np.asarray(losses.per_market, dtype=np.float64)
        if per_market.shape != (self.n,) or not np.all(np.isfinite(per_market)):
            self.poisoned = True
            raise PoisonedStateError(f"non-finite or misshaped loss {per_market}")
        p = chosen.price
        q_price = self._price_probs[p]
        for i, c in enumerate(chosen.options):
            # a cell whose probability underflowed to zero gets weight exp(-inf) = 0
            with np.errstate(divide="ignore"):
                f = per_market[i] / (self._cost_probs[i, p, c] * (q_price + self.gamma))
            row = self.cost_logweights[i, p].copy()
            row[c] -= self.eta * f
            row = normalize_log(row)
            self.cost_logweights[i, p] = row
            self._cost_probs[i, p] = np.exp(row)
        h = self.estimator_h(chosen, losses)
        self.set_price_logweights(self.price_logweights - self.eta * h)
        self.round += 1

    # checkpointing -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": "profitbandit.policy",
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "params": {
                "n": self.n,
                "K": self.K,
                "eta": self.eta,
                "gamma": self.gamma,
                "exploration_coef": self.exploration_coef,
                "option_values": self.option_values.tolist(),
            },
            "round": self.round,
            "price_logweights": self.price_logweights.tolist(),
            "cost_logweights": self.cost_logweights.tolist(),
        }

    @classmethod
    def _blank_from_dict(cls, doc):
        p = doc["params"]
        return DecomposedExp3(
            p["n"], p["K"], p["eta"], p["gamma"], p["option_values"], p["exploration_coef"]
        )

    @classmethod
    def from_dict(cls, doc: dict):
        if doc.get("version") != CHECKPOINT_VERSION:
            raise ParameterError(f"unsupported checkpoint version {doc.get('version')}")
        obj = cls._blank_from_dict(doc)
        obj.round = int(doc["round"])
        obj.set_price_logweights(np.asarray(doc["price_logweights"], dtype=np.float64))
        obj.cost_logweights = normalize_log(np.asarray(doc["cost_logweights"], dtype=np.float64))
        obj._cost_probs = np.exp(obj.cost_logweights)
        return obj


class MonotonicPolicy(DecomposedExp3):
    """Decomposed EXP3 over the grid ``I_K`` for both price and costs."""

    kind = "monotonic"

    def __init__(self, params: MonotonicParams):
        self.params = params
        grid = make_price_grid(params.K)
        super().__init__(params.n, params.K, params.eta, params.gamma, grid.points)

    @classmethod
    def _blank_from_dict(cls, doc):
        p = doc["params"]
        return cls(MonotonicParams(n=p["n"], K=p["K"], eta=p["eta"], gamma=p["gamma"]))


def init(params: MonotonicParams) -> MonotonicPolicy:
    return MonotonicPolicy(params)
