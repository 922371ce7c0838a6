"""Kernelized exponential weights for cost-concave demands.

Cost densities live on the truncated interval ``[delta, 1 - delta]`` and are
represented as piecewise-constant functions on a uniform grid of ``m``
points.  Cell ``j`` is the part of ``[x_j - spacing/2, x_j + spacing/2]``
inside the interval, so the two boundary cells have half width and the
cells partition the interval exactly.  All integrals are exact for this
representation.

The playing density is ``q = K[u] u``: the smoothing kernel built from the
mean of the weight density ``u`` applied to ``u`` itself.  The kernel column
for an input point ``y`` is the uniform density between ``y`` and the mean,
or a uniform density of width ``epsilon`` next to the mean when ``y`` is
within ``epsilon`` of it.  Discretized kernel columns are cell averages of
that uniform density, so each column integrates to exactly one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Action, NormalizedLoss, ParameterError, PoisonedStateError, ProfitBanditError, make_price_grid
from .hedge import normalize_log, sample_index
from .policy_monotonic import CHECKPOINT_VERSION, Chosen

NORMALIZATION_TOL = 1e-6
RESOLUTION_TOL = 1e-3


class DomainError(ProfitBanditError, ValueError):
    """Kernel argument outside the truncated cost interval."""


class ResolutionError(ProfitBanditError, ValueError):
    """Quadrature drift too large for the configured grid size."""


@dataclass(frozen=True)
class KernelSpec:
    epsilon: float
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ParameterError(f"delta must lie in (0, 1/2), got {self.delta}")
        if not self.epsilon > 0.0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        # the one-sided epsilon window next to the mean must fit in the interval
        if not self.epsilon < (1.0 - 2.0 * self.delta) / 2.0:
            raise ParameterError(
                f"epsilon={self.epsilon} too wide for delta={self.delta}; "
                "need epsilon < (1 - 2*delta)/2"
            )


class CostGrid:
    """Uniform ``m``-point representation of ``[delta, 1 - delta]``."""

    def __init__(self, delta: float, m: int = 256):
        if not 0.0 < delta < 0.5:
            raise ParameterError(f"delta must lie in (0, 1/2), got {delta}")
        if int(m) != m or m < 8:
            raise ParameterError(f"cost grid needs m >= 8 points, got {m}")
        self.delta = float(delta)
        self.m = int(m)
        self.points = np.linspace(self.delta, 1.0 - self.delta, self.m)
        self.spacing = (1.0 - 2.0 * self.delta) / (self.m - 1)
        mids = 0.5 * (self.points[:-1] + self.points[1:])
        self.edges = np.concatenate([[self.delta], mids, [1.0 - self.delta]])
        self.widths = np.diff(self.edges)
        # exact first moment of each cell, used for means of piecewise-constant densities
        self.moments = 0.5 * (self.edges[1:] ** 2 - self.edges[:-1] ** 2)

    def integrate(self, density) -> float:
        return float(np.dot(density, self.widths))

    def uniform(self) -> np.ndarray:
        return np.full(self.m, 1.0 / (1.0 - 2.0 * self.delta))

    def cell_of(self, x: float) -> int:
        j = int(np.searchsorted(self.edges, x, side="right")) - 1
        return min(max(j, 0), self.m - 1)

    def __eq__(self, other):
        return isinstance(other, CostGrid) and (self.delta, self.m) == (other.delta, other.m)


def _check_normalized(grid: CostGrid, u, tol=NORMALIZATION_TOL):
    total = grid.integrate(u)
    if abs(total - 1.0) > tol:
        raise ParameterError(f"density integrates to {total}, expected 1")


def kernel_mean(grid: CostGrid, u) -> float:
    """Mean of a normalized piecewise-constant density on the grid."""
    u = np.asarray(u, dtype=np.float64)
    _check_normalized(grid, u)
    mu = float(np.dot(u, grid.moments))
    return min(max(mu, grid.delta), 1.0 - grid.delta)


def _in_domain(spec: KernelSpec, v) -> bool:
    return spec.delta - 1e-12 <= v <= 1.0 - spec.delta + 1e-12


def kernel_density(spec: KernelSpec, mu: float, x: float, y: float) -> float:
    """Pointwise value of the smoothing kernel at output ``x`` for input ``y``."""
    for name, v in (("mu", mu), ("x", x), ("y", y)):
        if not _in_domain(spec, v):
            raise DomainError(f"{name}={v} outside [{spec.delta}, {1 - spec.delta}]")
    eps = spec.epsilon
    gap = abs(y - mu)
    if gap >= eps:
        return 1.0 / gap if min(y, mu) <= x <= max(y, mu) else 0.0
    if mu >= eps + spec.delta:
        return 1.0 / eps if mu - eps <= x <= mu else 0.0
    return 1.0 / eps if mu <= x <= mu + eps else 0.0


def kernel_intervals(spec: KernelSpec, mu: float, y):
    """Support ``[lo, hi]`` of the kernel column for each input point in ``y``."""
    y = np.asarray(y, dtype=np.float64)
    eps = spec.epsilon
    far = np.abs(y - mu) >= eps
    if mu >= eps + spec.delta:
        near_lo, near_hi = mu - eps, mu
    else:
        near_lo, near_hi = mu, mu + eps
    lo = np.where(far, np.minimum(y, mu), near_lo)
    hi = np.where(far, np.maximum(y, mu), near_hi)
    return lo, hi


def kernel_matrix(spec: KernelSpec, grid: CostGrid, mu: float) -> np.ndarray:
    """Dense discretized kernel: entry ``[j, k]`` is the cell-``j`` average of column ``k``.

    O(m^2); used for inspection and as a reference for :func:`apply_kernel`.
    """
    lo, hi = kernel_intervals(spec, mu, grid.points)
    L = grid.edges[:-1, None]
    R = grid.edges[1:, None]
    overlap = np.clip(np.minimum(R, hi[None, :]) - np.maximum(L, lo[None, :]), 0.0, None)
    return overlap / (grid.widths[:, None] * (hi - lo)[None, :])


def kernel_row(spec: KernelSpec, grid: CostGrid, mu: float, j: int) -> np.ndarray:
    """Row ``j`` of :func:`kernel_matrix`: kernel at the cell of ``x_j`` for every input."""
    lo, hi = kernel_intervals(spec, mu, grid.points)
    L, R = grid.edges[j], grid.edges[j + 1]
    overlap = np.clip(np.minimum(R, hi) - np.maximum(L, lo), 0.0, None)
    return overlap / (grid.widths[j] * (hi - lo))


def _right_side_mass(edges, y, rate, mu):
    """Cell integrals of ``sum_k rate_k * 1[x in [mu, y_k]]`` for sorted ``y``.

    Entries of ``rate`` must be zero for columns with ``y_k <= mu``.  Uses
    suffix sums of nonnegative terms only, so the result is nonnegative.
    """
    L, R = edges[:-1], edges[1:]
    suffix = np.concatenate([np.cumsum(rate[::-1])[::-1], [0.0]])
    first = np.searchsorted(y, R, side="left")
    out = np.clip(R - np.maximum(L, mu), 0.0, None) * suffix[first]
    # columns whose endpoint falls strictly inside a cell cover it partially
    j = np.searchsorted(R, y, side="right")
    inside = (j < len(R)) & (rate > 0)
    if np.any(inside):
        jj = j[inside]
        part = np.clip(y[inside] - np.maximum(L[jj], mu), 0.0, None)
        part = np.where(y[inside] > L[jj], part, 0.0)
        np.add.at(out, jj, rate[inside] * part)
    return out


def apply_kernel(spec: KernelSpec, grid: CostGrid, u, mu: float | None = None) -> np.ndarray:
    """Smoothed density ``q(x) = integral of K[u](x, y) u(y) dy`` on the grid.

    Runs in O(m log m).  The result is renormalized; a pre-normalization
    integral off by more than ``RESOLUTION_TOL`` raises :class:`ResolutionError`.
    """
    u = np.asarray(u, dtype=np.float64)
    if mu is None:
        mu = kernel_mean(grid, u)
    y = grid.points
    mass = u * grid.widths
    eps = spec.epsilon
    gap = y - mu
    right = gap >= eps
    left = gap <= -eps
    near_mass = float(mass[~(right | left)].sum())

    rate_r = np.where(right, mass / np.where(right, gap, 1.0), 0.0)
    out = _right_side_mass(grid.edges, y, rate_r, mu)

    if np.any(left):
        # mirror the interval so the left-side columns become right-side ones
        rate_l = np.where(left, mass / np.where(left, -gap, 1.0), 0.0)
        out += _right_side_mass(
            (1.0 - grid.edges)[::-1], (1.0 - y)[::-1], rate_l[::-1], 1.0 - mu
        )[::-1]

    if near_mass > 0.0:
        lo, hi = (mu - eps, mu) if mu >= eps + spec.delta else (mu, mu + eps)
        overlap = np.clip(np.minimum(grid.edges[1:], hi) - np.maximum(grid.edges[:-1], lo), 0.0, None)
        out += near_mass * overlap / eps

    total = out.sum()
    if abs(total - 1.0) > RESOLUTION_TOL:
        raise ResolutionError(
            f"smoothed density integrates to {total}; increase the cost grid size m"
        )
    return out / (total * grid.widths)


@dataclass(frozen=True)
class ConcaveParams:
    n: int
    K: int
    eta: float
    epsilon: float
    delta: float
    gamma: float | None = None  # defaults to eta * log(e / epsilon)
    m: int = 256

    def __post_init__(self):
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.eta * math.log(math.e / self.epsilon))
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"market count n must be a positive integer, got {self.n}")
        if int(self.K) != self.K or self.K < 1:
            raise ParameterError(f"K must be a positive integer, got {self.K}")
        if not self.eta > 0:
            raise ParameterError(f"learning rate eta must be positive, got {self.eta}")
        if not self.gamma > 0:
            raise ParameterError(f"bias control gamma must be positive, got {self.gamma}")
        KernelSpec(self.epsilon, self.delta)
        CostGrid(self.delta, self.m)

    @property
    def kernel(self) -> KernelSpec:
        return KernelSpec(self.epsilon, self.delta)

    @property
    def exploration_coef(self) -> float:
        return 3.0 * self.eta * math.log(math.e / self.epsilon)


class ConcavePolicy:
    """Price Hedge plus kernelized exponential weights over costs."""

    kind = "concave"

    def __init__(self, params: ConcaveParams):
        self.params = params
        self.n, self.K = params.n, params.K
        self.eta, self.gamma = float(params.eta), float(params.gamma)
        self.spec = params.kernel
        self.grid = CostGrid(params.delta, params.m)
        self.price_grid = make_price_grid(self.K)
        n_prices = self.K + 1
        m = self.grid.m
        self.price_logweights = np.full(n_prices, -np.log(n_prices))
        self._price_probs = np.exp(self.price_logweights)
        self.u_logdensity = np.full((self.n, n_prices, m), np.log(self.grid.uniform()[0]))
        u0 = self.grid.uniform()
        mu0 = kernel_mean(self.grid, u0)
        q0 = apply_kernel(self.spec, self.grid, u0, mu0)
        self._q = np.broadcast_to(q0, (self.n, n_prices, m)).copy()
        self._mu = np.full((self.n, n_prices), mu0)
        self._stale = np.zeros((self.n, n_prices), dtype=bool)
        self.round = 1
        self.last = None
        self.poisoned = False

    # distributions -------------------------------------------------------
    @property
    def price_probs(self) -> np.ndarray:
        return self._price_probs

    def set_price_logweights(self, logw):
        self.price_logweights = normalize_log(logw)
        self._price_probs = np.exp(self.price_logweights)

    def u_density(self, i, p_idx) -> np.ndarray:
        return np.exp(self.u_logdensity[i, p_idx])

    def _refresh(self, i, p_idx):
        if self._stale[i, p_idx]:
            u = self.u_density(i, p_idx)
            mu = kernel_mean(self.grid, u)
            self._mu[i, p_idx] = mu
            self._q[i, p_idx] = apply_kernel(self.spec, self.grid, u, mu)
            self._stale[i, p_idx] = False

    def q_density(self, i, p_idx) -> np.ndarray:
        self._refresh(i, p_idx)
        return self._q[i, p_idx]

    def u_mean(self, i, p_idx) -> float:
        self._refresh(i, p_idx)
        return float(self._mu[i, p_idx])

    # sampling ------------------------------------------------------------
    def sample_cost(self, i, p_idx, rng) -> int:
        """Grid index drawn with probability ``q(x_j) * width_j``."""
        return sample_index(self.q_density(i, p_idx) * self.grid.widths, rng)

    def sample_indices(self, rng) -> Chosen:
        p_idx = sample_index(self._price_probs, rng)
        opts = tuple(self.sample_cost(i, p_idx, rng) for i in range(self.n))
        chosen = Chosen(price=p_idx, options=opts)
        self.last = chosen
        return chosen

    def sample_action(self, rng) -> Action:
        chosen = self.sample_indices(rng)
        return Action(
            costs=self.grid.points[list(chosen.options)],
            price=self.price_grid.points[chosen.price],
        )

    # estimators ----------------------------------------------------------
    def _weight(self, chosen: Chosen, losses: NormalizedLoss, i) -> float:
        p = chosen.price
        q_cost = self.q_density(i, p)[chosen.options[i]]
        return losses.per_market[i] / (q_cost * (self._price_probs[p] + self.gamma))

    def estimator_f(self, chosen: Chosen, losses: NormalizedLoss, i, c_idx=None, p_idx=None):
        """Kernel-weighted loss estimate for market ``i``.

        Returns the value at cost-grid index ``c_idx`` or, when omitted, the
        whole vector over the cost grid.  Zero unless ``p_idx`` is the
        sampled price.
        """
        p = chosen.price if p_idx is None else p_idx
        if p != chosen.price:
            return 0.0 if c_idx is not None else np.zeros(self.grid.m)
        row = kernel_row(self.spec, self.grid, self.u_mean(i, p), chosen.options[i])
        values = self._weight(chosen, losses, i) * row
        return values if c_idx is None else float(values[c_idx])

    def estimator_h(self, chosen: Chosen, losses: NormalizedLoss, p_idx=None):
        q = self._price_probs
        coef = self.params.exploration_coef
        h = coef * (1.0 / self.gamma - 1.0 / (q + self.gamma))
        h[chosen.price] += losses.total / (self.n * (q[chosen.price] + self.gamma))
        return h if p_idx is None else float(h[p_idx])

    # update --------------------------------------------------------------
    def update(self, chosen: Chosen, losses: NormalizedLoss):
        if self.poisoned:
            raise PoisonedStateError("policy state was poisoned by an earlier non-finite loss")
        per_market = np.asarray(losses.per_market, dtype=np.float64)
        if per_market.shape != (self.n,) or not np.all(np.isfinite(per_market)):
            self.poisoned = True
            raise PoisonedStateError(f"non-finite or misshaped loss {per_market}")
        p = chosen.price
        widths = self.grid.widths
        for i in range(self.n):
            f = self.estimator_f(chosen, losses, i)
            if not np.all(np.isfinite(f)):
                self.poisoned = True
                raise PoisonedStateError("non-finite cost estimate")
            lu = self.u_logdensity[i, p] - self.eta * f
            top = lu.max()
            lu = lu - (top + np.log(np.dot(np.exp(lu - top), widths)))
            self.u_logdensity[i, p] = lu
            self._stale[i, p] = True
            self._refresh(i, p)
        h = self.estimator_h(chosen, losses)
        self.set_price_logweights(self.price_logweights - self.eta * h)
        self.round += 1

    # checkpointing -------------------------------------------------------
    def to_dict(self) -> dict:
        prm = self.params
        return {
            "format": "profitbandit.policy",
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "params": {
                "n": prm.n, "K": prm.K, "eta": prm.eta, "gamma": prm.gamma,
                "epsilon": prm.epsilon, "delta": prm.delta, "m": prm.m,
            },
            "cost_grid": self.grid.points.tolist(),
            "round": self.round,
            "price_logweights": self.price_logweights.tolist(),
            "u_logdensity": self.u_logdensity.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ConcavePolicy":
        if doc.get("version") != CHECKPOINT_VERSION:
            raise ParameterError(f"unsupported checkpoint version {doc.get('version')}")
        obj = cls(ConcaveParams(**doc["params"]))
        obj.round = int(doc["round"])
        obj.set_price_logweights(np.asarray(doc["price_logweights"], dtype=np.float64))
        obj.u_logdensity = np.asarray(doc["u_logdensity"], dtype=np.float64)
        obj._stale[:] = True
        return obj
