"""Domain types and profit/loss arithmetic shared by every policy and environment.

Prices, marketing costs and demands are all normalized to ``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ProfitBanditError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(ProfitBanditError, ValueError):
    """Vector lengths disagree with the market count."""


class RangeError(ProfitBanditError, ValueError):
    """A value lies outside its normalized range."""


class ParameterError(ProfitBanditError, ValueError):
    """Invalid algorithm or environment parameter."""


class PoisonedStateError(ProfitBanditError, RuntimeError):
    """A policy received non-finite input and refuses further updates."""


def _as_unit_vector(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RangeError(f"{name} contains non-finite entries")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise RangeError(f"{name} must lie in [0, 1], got {arr}")
    return arr


@dataclass(frozen=True)
class Action:
    """One common price and a marketing cost per market."""

    costs: np.ndarray
    price: float

    def __post_init__(self):
        object.__setattr__(self, "costs", _as_unit_vector(self.costs, "costs"))
        price = float(self.price)
        if not 0.0 <= price <= 1.0:
            raise RangeError(f"price must lie in [0, 1], got {price}")
        object.__setattr__(self, "price", price)

    @property
    def n(self) -> int:
        return self.costs.shape[0]


@dataclass(frozen=True)
class DemandVector:
    demands: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "demands", _as_unit_vector(self.demands, "demands"))

    @property
    def n(self) -> int:
        return self.demands.shape[0]


@dataclass(frozen=True)
class ProfitBreakdown:
    per_market: np.ndarray
    total: float


@dataclass(frozen=True)
class NormalizedLoss:
    """Per-market losses ``(1 - profit) / 2`` and their sum."""

    per_market: np.ndarray
    total: float


@dataclass(frozen=True)
class PriceGrid:
    K: int
    points: np.ndarray

    def __len__(self):
        return self.points.shape[0]

    def index_of(self, price: float) -> int:
        idx = int(round(price * self.K))
        if not np.isclose(self.points[idx], price, rtol=0.0, atol=1e-12):
            raise RangeError(f"price {price} is not on the grid I_{self.K}")
        return idx


def compute_profit(action: Action, demands: DemandVector) -> ProfitBreakdown:
    """Per-market profit ``price * demand - cost``."""
    if action.n != demands.n:
        raise DimensionError(
            f"action has {action.n} markets but demand vector has {demands.n}"
        )
    per_market = action.price * demands.demands - action.costs
    return ProfitBreakdown(per_market=per_market, total=float(per_market.sum()))


def normalize_loss(profit: ProfitBreakdown) -> NormalizedLoss:
    per_market = np.asarray(profit.per_market, dtype=np.float64)
    if not np.all(np.isfinite(per_market)):
        raise RangeError("profit contains non-finite entries")
    if np.any(per_market < -1.0) or np.any(per_market > 1.0):
        raise RangeError(f"per-market profit must lie in [-1, 1], got {per_market}")
    losses = 0.5 * (1.0 - per_market)
    return NormalizedLoss(per_market=losses, total=float(losses.sum()))


def make_price_grid(K: int) -> PriceGrid:
    """Uniform grid ``{0, 1/K, ..., 1}`` with ``K + 1`` points."""
    if int(K) != K or K < 1:
        raise ParameterError(f"discretization size K must be a positive integer, got {K}")
    K = int(K)
    points = np.arange(K + 1, dtype=np.float64) / K
    return PriceGrid(K=K, points=points)
