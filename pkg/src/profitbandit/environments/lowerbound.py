"""Hard instances used to argue that the monotonic regret rate cannot be improved.

All instances share demand ``b * 1[v >= p]`` with independent ``b`` (Bernoulli,
mean ``g(c)``) and ``v`` (supported on the price grid ``P``).  The baseline
earns zero expected profit everywhere on ``C x P``.  Each alternative raises
both ``E[b]`` and ``P(v >= p)`` slightly inside a small window next to one
grid pair ``(c*, p*)``, making that pair strictly profitable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..core import Action, DemandVector, ParameterError
from .base import Environment

_SNAP = 1e-9


def _floor_snap(x):
    """floor(x), treating values within 1e-9 (relative) of an integer as that integer."""
    x = np.asarray(x, dtype=np.float64)
    r = np.round(x)
    near = np.abs(x - r) <= _SNAP * np.maximum(1.0, np.abs(x))
    return np.where(near, r, np.floor(x))


def _ceil_snap(x):
    x = np.asarray(x, dtype=np.float64)
    r = np.round(x)
    near = np.abs(x - r) <= _SNAP * np.maximum(1.0, np.abs(x))
    return np.where(near, r, np.ceil(x))


def g_of_c(c, K):
    """Bernoulli mean ``min(1, floor(2cK) / K)``; equals ``2c`` exactly on the cost grid."""
    return np.minimum(1.0, _floor_snap(2.0 * np.asarray(c, dtype=np.float64) * K) / K)


def kl_bernoulli(a, b):
    """KL divergence between Bernoulli(a) and Bernoulli(b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(a > 0, a * np.log(a / b), 0.0)
        t2 = np.where(a < 1, (1 - a) * np.log((1 - a) / (1 - b)), 0.0)
    return t1 + t2


@dataclass(frozen=True)
class LowerBoundGrids:
    """Cost grid ``C = {0, eps/2, ..., 1/2}``, price grid ``P = {1/2, ..., 1}`` and candidate set ``S``."""

    K: int
    epsilon: float = field(init=False)
    C: np.ndarray = field(init=False, repr=False)
    P: np.ndarray = field(init=False, repr=False)
    S: tuple = field(init=False, repr=False)  # (cost index, price index) pairs

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ParameterError(f"K must be a positive integer, got {self.K}")
        K = int(self.K)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "epsilon", 1.0 / K)
        object.__setattr__(self, "C", np.array([i / (2 * K) for i in range(K + 1)]))
        object.__setattr__(self, "P", np.array([(K + j) / (2 * K) for j in range(K + 1)]))
        members = []
        for i in range(K + 1):
            for j in range(K + 1):
                c, p = Fraction(i, 2 * K), Fraction(K + j, 2 * K)
                if Fraction(2, 5) <= c <= Fraction(9, 20) and Fraction(3, 5) <= p <= Fraction(4, 5):
                    members.append((i, j))
        object.__setattr__(self, "S", tuple(members))

    def S_values(self):
        return [(float(self.C[i]), float(self.P[j])) for i, j in self.S]

    def cost_index(self, c):
        i = int(round(c * 2 * self.K))
        return i if 0 <= i <= self.K and abs(self.C[i] - c) <= 1e-12 else None

    def price_index(self, p):
        j = int(round(p * 2 * self.K)) - self.K
        return j if 0 <= j <= self.K and abs(self.P[j] - p) <= 1e-12 else None

    def on_grid(self, c, p):
        """Vectorized membership of ``(c, p)`` in ``C x P``."""
        c = np.asarray(c, dtype=np.float64)
        p = np.asarray(p, dtype=np.float64)
        ci = np.round(c * 2 * self.K)
        pj = np.round(p * 2 * self.K)
        on_c = (np.abs(c - ci / (2 * self.K)) <= 1e-12) & (ci >= 0) & (ci <= self.K)
        on_p = (np.abs(p - pj / (2 * self.K)) <= 1e-12) & (pj >= self.K) & (pj <= 2 * self.K)
        return on_c & on_p


class LowerBoundEnvironment(Environment):
    """Baseline (``bump=None``) or alternative (``bump=(c*, p*)`` in ``S``), ``n`` independent copies."""

    stationary = True

    def __init__(self, n, K, bump=None):
        super().__init__(n)
        self.grids = LowerBoundGrids(K)
        self.K = self.grids.K
        self.epsilon = self.grids.epsilon
        self.bump = None
        if bump is not None:
            c_star, p_star = bump
            i = self.grids.cost_index(c_star)
            j = self.grids.price_index(p_star)
            if i is None or j is None or (i, j) not in self.grids.S:
                raise ParameterError(
                    f"(c*, p*)=({c_star}, {p_star}) is not in S: need (c*, p*) on the grid "
                    "C x P with 2/5 <= c* <= 9/20 and 3/5 <= p* <= 4/5"
                )
            self.bump = (i, j)
        self.name = "lowerbound_base" if bump is None else "lowerbound_alt"
        self._support = self.pmf(False)[0]
        self._cdf = {flag: np.cumsum(self.pmf(flag)[1]) for flag in (False, True)}

    @property
    def c_star(self):
        return None if self.bump is None else float(self.grids.C[self.bump[0]])

    @property
    def p_star(self):
        return None if self.bump is None else float(self.grids.P[self.bump[1]])

    def bump_active(self, c, p):
        """Membership in ``[c*, c* + eps/2) x (p* - eps/2, p*]``."""
        c = np.asarray(c, dtype=np.float64)
        p = np.asarray(p, dtype=np.float64)
        if self.bump is None:
            return np.zeros(np.broadcast(c, p).shape, dtype=bool)
        i, j = self.bump
        K2 = 2 * self.K
        c_lo, c_hi = i / K2, (i + 1) / K2
        p_lo, p_hi = (self.K + j - 1) / K2, (self.K + j) / K2
        return (c >= c_lo) & (c < c_hi) & (p > p_lo) & (p <= p_hi)

    def grid_survival(self, bumped):
        """``P(v >= p_j)`` at the price grid points."""
        P = self.grids.P
        return 1.0 / (2.0 * P + (self.epsilon if bumped else 0.0))

    def pmf(self, bumped):
        """Support and probabilities of ``v``.

        Grid masses are successive survival differences with the terminal
        mass at ``p = 1``.  Any mass left below ``1/2`` sits at ``v = 0``.
        """
        s = self.grid_survival(bumped)
        masses = np.append(s[:-1] - s[1:], s[-1])
        support = np.concatenate([[0.0], self.grids.P])
        return support, np.concatenate([[1.0 - s[0]], masses])

    def survival(self, p, bumped=False):
        """``P(v >= p)`` for arbitrary ``p``, summed from the pmf."""
        p = np.asarray(p, dtype=np.float64)
        s = self.grid_survival(bumped)
        K2 = 2 * self.K
        j = _ceil_snap((p - 0.5) * K2).astype(int)
        inside = np.clip(j, 0, self.K)
        out = s[inside]
        out = np.where(p <= 0.5, s[0], out)
        out = np.where(p <= 0.0, 1.0, out)
        return np.where(p > 1.0, 0.0, out)

    def oracle_mean(self, t, i, c, p):
        c = np.asarray(c, dtype=np.float64)
        p = np.asarray(p, dtype=np.float64)
        active = self.bump_active(c, p)
        b_mean = g_of_c(c, self.K) + np.where(active, self.epsilon, 0.0)
        surv = np.where(active, self.survival(p, True), self.survival(p, False))
        return b_mean * surv

    def sample(self, t, action: Action, rng) -> DemandVector:
        self._check(action)
        p = action.price
        out = np.empty(self.n)
        for i, c in enumerate(action.costs):
            active = bool(self.bump_active(c, p))
            b_mean = float(g_of_c(c, self.K)) + (self.epsilon if active else 0.0)
            b = rng.random() < b_mean
            cdf = self._cdf[active]
            v = self._support[min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)]
            out[i] = float(b and v >= p)
        return DemandVector(out)

    def expected_profit(self, c, p):
        return np.asarray(p) * self.oracle_mean(1, 0, c, p) - np.asarray(c)

    def describe(self):
        d = {**super().describe(), "K": self.K}
        if self.bump is not None:
            d["c_star"], d["p_star"] = self.c_star, self.p_star
        return d


def kl_sum(c_star, p_star, epsilon):
    """``kl(2c*, 2c*+eps) + kl(1/(2p*), 1/(2p*+eps))``."""
    return float(
        kl_bernoulli(2 * c_star, 2 * c_star + epsilon)
        + kl_bernoulli(1 / (2 * p_star), 1 / (2 * p_star + epsilon))
    )


def _monotone_violations(values, axis, increasing):
    diff = np.diff(values, axis=axis)
    return int(np.sum(diff < -1e-12)) if increasing else int(np.sum(diff > 1e-12))


def verify_lowerbound(K=20, bump=None, probes=201, offgrid_margin=1e-6, grid_tol=1e-12):
    """Check the four structural properties and the KL bound on a probe grid.

    Returns a dict of named checks, each with ``passed`` and diagnostics.
    Items: (1) mean demand non-decreasing in cost, (2) non-increasing in
    price, (3) profit at (c*, p*) at least eps/20, (4) zero profit on
    ``C x P`` except (c*, p*) and profit below ``-offgrid_margin`` off it.
    """
    env = LowerBoundEnvironment(1, K, bump)
    grids = env.grids
    eps = grids.epsilon
    axis = np.array([k / (probes - 1) for k in range(probes)])
    cc, pp = np.meshgrid(axis, axis, indexing="ij")
    dbar = env.oracle_mean(1, 0, cc, pp)
    profit = pp * dbar - cc

    checks = {}
    checks["item1_monotone_in_cost"] = {
        "violations": _monotone_violations(dbar, 0, increasing=True)}
    checks["item2_monotone_in_price"] = {
        "violations": _monotone_violations(dbar, 1, increasing=False)}
    for key in ("item1_monotone_in_cost", "item2_monotone_in_price"):
        checks[key]["passed"] = checks[key]["violations"] == 0

    if env.bump is not None:
        star = float(env.expected_profit(env.c_star, env.p_star))
        closed = (eps / 2) * (env.p_star - env.c_star) / (env.p_star + eps / 2)
        checks["item3_profit_at_optimum"] = {
            "profit": star, "closed_form": closed, "threshold": eps / 20,
            "passed": star >= eps / 20,
        }

    # every grid pair, not just those the probes hit
    Cg, Pg = np.meshgrid(grids.C, grids.P, indexing="ij")
    grid_profit = env.expected_profit(Cg, Pg)
    if env.bump is not None:
        grid_profit[env.bump] = 0.0
    worst_grid = float(np.max(np.abs(grid_profit)))
    checks["item4_zero_on_grid"] = {"max_abs_profit": worst_grid, "tolerance": grid_tol,
                                    "passed": worst_grid <= grid_tol}

    off = ~grids.on_grid(cc, pp)
    bad = off & (profit >= -offgrid_margin)
    bad_points = [(float(cc[k]), float(pp[k]), float(profit[k])) for k in zip(*np.nonzero(bad))]
    in_window = env.bump_active(cc, pp)
    checks["item4_negative_off_grid"] = {
        "probes": int(off.sum()), "margin": offgrid_margin,
        "violations": len(bad_points), "max_profit": float(profit[off].max()),
        "violations_zero_cost": int(np.sum(bad & (cc == 0.0))),
        "violations_in_bump_window": int(np.sum(bad & in_window)),
        "violations_elsewhere": int(np.sum(bad & (cc != 0.0) & ~in_window)),
        "examples": bad_points[:10], "passed": not bad_points,
    }

    bound = 54 * eps ** 2
    kls = {(float(grids.C[i]), float(grids.P[j])): kl_sum(grids.C[i], grids.P[j], eps) for i, j in grids.S}
    checks["kl_bound"] = {"bound": bound, "max_kl": max(kls.values()) if kls else 0.0,
                          "members": len(kls), "passed": all(v <= bound for v in kls.values())}
    return checks
