"""Experiment engine: episodes, hindsight optimum, regret across seeds, horizon sweeps.

Every run is keyed by an integer seed.  The seed is expanded with
``numpy.random.SeedSequence`` into two independent substreams, one for the
policy's own randomness and one for the environment's demand draws, so a
seed fully determines the run.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .core import Action, DimensionError, ParameterError, compute_profit
from .environments import (
    Environment,
    LinearMonotone,
    LogisticPrice,
    LowerBoundEnvironment,
    MarketingAlternatives,
    Schedule,
    SqrtConcave,
)
from .policy_baseline import FixedPolicy, JointExp3, UniformPolicy
from .policy_concave import ConcaveParams, ConcavePolicy
from .policy_monotonic import MonotonicParams, MonotonicPolicy
from .variants import (
    ABConfig,
    ABPolicy,
    ABProblem,
    CoreProblem,
    PromoConfig,
    PromoProblem,
    SubscriptionConfig,
    SubscriptionProblem,
)

ALGORITHMS = ("alg1", "alg2", "joint", "uniform", "fixed")
CSV_COLUMNS = (
    "run_id", "algo", "env", "variant", "n", "T", "K", "eta", "gamma",
    "epsilon", "delta", "m", "seed", "alg_profit", "opt", "regret",
)
DEFAULT_RESOLUTION = 2001
SLOPE_FLOOR_SE = 10.0


class ConfigError(ParameterError):
    """A run configuration is missing a field or has an invalid value."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


# --- parameters ----------------------------------------------------------

@dataclass(frozen=True)
class Params:
    """Resolved tuning parameters of one run; unused entries are ``None``."""

    K: int | None = None
    eta: float | None = None
    gamma: float | None = None
    epsilon: float | None = None
    delta: float | None = None
    m: int | None = None


def _root_ceil(T, power, constant):
    x = constant * T**power
    r = round(x)
    # T**(1/3) for a perfect cube can land a hair above the integer
    return int(r) if abs(x - r) < 1e-9 else int(math.ceil(x))


def default_params(algorithm, T, n=1, K_override=None, constant=1.0, m=256) -> Params:
    """Default tuning for horizon ``T`` from the regret-bound rates.

    ``constant`` multiplies both ``K`` and ``eta`` (all order constants are
    taken to be 1 otherwise).
    """
    if T < 16:
        raise ParameterError(f"default parameters need T >= 16, got {T}")
    if not constant > 0:
        raise ParameterError(f"constant multiplier must be positive, got {constant}")
    if algorithm in ("alg1", "ab"):
        K = K_override or _root_ceil(T, 0.25, constant)
        eta = constant * T ** -0.75
        # the A/B gamma depends on M and is filled in by resolve_params
        return Params(K=int(K), eta=eta, gamma=eta if algorithm == "alg1" else None)
    if algorithm == "alg2":
        K = K_override or _root_ceil(T, 1.0 / 3.0, constant)
        eta = constant * T ** (-2.0 / 3.0)
        return Params(K=int(K), eta=eta, gamma=eta * (1.0 + 2.0 * math.log(T)),
                      epsilon=float(T) ** -2, delta=1.0 / T, m=int(m))
    if algorithm == "joint":
        K = K_override or _root_ceil(T, 0.25, constant)
        arms = (K + 1) ** (n + 1)
        eta = constant * math.sqrt(2.0 * math.log(arms) / (arms * T))
        return Params(K=int(K), eta=eta)
    if algorithm in ("uniform", "fixed"):
        return Params()
    raise ParameterError(f"unknown algorithm {algorithm!r}")


# --- configuration ------------------------------------------------------

@dataclass
class RunConfig:
    algo: str
    env: dict
    n: int
    T: int
    seeds: tuple = (0,)
    variant: dict = field(default_factory=lambda: {"kind": "core"})
    overrides: dict = field(default_factory=dict)
    constant: float = 1.0
    resolution: int = DEFAULT_RESOLUTION
    variance_reduced: bool = False
    keep_trace: bool = False

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"algo must be one of {ALGORITHMS}, got {self.algo!r}", "algo")
        if not isinstance(self.env, dict) or "kind" not in self.env:
            raise ConfigError("env must be an object with a 'kind' field", "env.kind")
        for name in ("n", "T", "resolution"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {value!r}", name)
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}", "n")
        if self.T < 0:
            raise ConfigError(f"T must be nonnegative, got {self.T}", "T")
        if self.resolution < 2:
            raise ConfigError("resolution needs at least 2 grid points", "resolution")
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigError("at least one seed is required", "seeds")
        if "kind" not in self.variant:
            raise ConfigError("variant must have a 'kind' field", "variant.kind")
        if self.variant["kind"] == "ab" and self.algo not in ("alg1",):
            raise ConfigError("the A/B variant runs the decomposed policy only (algo 'alg1')", "algo")

    def to_dict(self):
        return asdict(self)

    def with_T(self, T):
        doc = self.to_dict()
        doc["T"] = int(T)
        return RunConfig(**doc)


def config_from_dict(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown configuration field(s): {', '.join(unknown)}", unknown[0])
    for required in ("algo", "env", "n", "T"):
        if required not in doc:
            raise ConfigError(f"missing required field '{required}'", required)
    try:
        return RunConfig(**doc)
    except ConfigError:
        raise
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def content_hash(payload) -> str:
    """Git-style blob hash (SHA-1 over ``"blob <len>\\0" + data``) of canonical JSON."""
    data = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


# --- builders ------------------------------------------------------------

def _noise(spec):
    return {k: spec[k] for k in ("noise", "noise_scale") if k in spec}


def build_environment(spec: dict, n: int, T: int | None = None) -> Environment:
    kind = spec.get("kind")
    try:
        if kind in ("linear_monotone", "a"):
            return LinearMonotone(n, a=spec.get("a", 1.0), b=spec.get("b", 1.0),
                                  base=spec.get("base", 0.0), **_noise(spec))
        if kind in ("sqrt_concave", "b"):
            return SqrtConcave(n, scale=spec.get("scale", 1.0), **_noise(spec))
        if kind in ("logistic_price", "c"):
            return LogisticPrice(n, k=spec.get("k", 10.0), p0=spec.get("p0", 0.5),
                                 lift=spec.get("lift", 0.3), shape=spec.get("shape", "monotone"),
                                 **_noise(spec))
        if kind in ("lowerbound", "lowerbound_base", "lowerbound_alt"):
            bump = spec.get("bump")
            return LowerBoundEnvironment(n, spec.get("K", 20), None if bump is None else tuple(bump))
        if kind == "alternatives":
            if "lifts" not in spec:
                raise ConfigError("alternatives environment needs 'lifts'", "env.lifts")
            return MarketingAlternatives(spec["lifts"], **_noise(spec))
        if kind == "schedule":
            phases = spec.get("phases")
            if not phases:
                raise ConfigError("schedule environment needs a non-empty 'phases' list", "env.phases")
            built = [build_environment(ph, n, T) for ph in phases]
            if "starts" in spec:
                return Schedule(built, spec["starts"])
            if T is None:
                raise ConfigError("schedule without 'starts' needs the horizon", "env.starts")
            rng = np.random.default_rng(spec.get("seed", 0))
            cuts = np.sort(rng.choice(np.arange(2, max(T, 2) + 1), size=min(len(built) - 1, max(T - 1, 0)),
                                      replace=False)) if len(built) > 1 else []
            starts = [1] + [int(c) for c in cuts]
            return Schedule(built[: len(starts)], starts)
    except (ParameterError, DimensionError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid environment parameters: {exc}", "env") from exc
    raise ConfigError(f"unknown environment kind {kind!r}", "env.kind")


def build_problem(spec: dict, n: int, T: int):
    kind = spec.get("kind", "core")
    if kind == "core":
        return CoreProblem()
    if kind == "subscription":
        if "betas" not in spec:
            raise ConfigError("subscription variant needs 'betas'", "variant.betas")
        betas = np.broadcast_to(np.asarray(spec["betas"], dtype=float), (n,))
        return SubscriptionProblem(SubscriptionConfig(betas=tuple(betas), T=max(T, 1)))
    if kind == "promo":
        if "r" in spec:
            r = np.asarray(spec["r"], dtype=float)
            r = np.broadcast_to(r if r.ndim == 2 else r.reshape(-1, 1) if r.ndim == 1 else r, (T, n))
        elif "r_range" in spec:
            lo, hi = spec["r_range"]
            r = np.random.default_rng(spec.get("seed", 0)).uniform(lo, hi, size=(T, n))
        else:
            r = np.ones((T, n))
        return PromoProblem(PromoConfig(np.array(r)))
    if kind == "ab":
        for key in ("M", "costs"):
            if key not in spec:
                raise ConfigError(f"A/B variant needs '{key}'", f"variant.{key}")
        return ABProblem(ABConfig(M=spec["M"], cost_schedule=np.asarray(spec["costs"]), K=spec.get("K", 1)))
    raise ConfigError(f"unknown variant kind {kind!r}", "variant.kind")


def resolve_params(config: RunConfig) -> Params:
    algo = "ab" if config.variant.get("kind") == "ab" else config.algo
    ov = dict(config.overrides)
    if config.T >= 16:
        base = default_params(algo, config.T, config.n, ov.get("K"), config.constant, ov.get("m", 256))
    else:
        base = Params(K=ov.get("K", 1), eta=ov.get("eta", 0.1), m=ov.get("m", 256))
    doc = asdict(base)
    for key in ("K", "eta", "gamma", "epsilon", "delta", "m"):
        if key in ov:
            doc[key] = ov[key]
    if "eta" in ov and "gamma" not in ov and algo in ("alg1", "ab"):
        doc["gamma"] = None
    if algo == "ab" and doc["gamma"] is None:
        if "M" not in config.variant:
            raise ConfigError("A/B variant needs 'M'", "variant.M")
        doc["gamma"] = doc["eta"] * math.sqrt(config.variant["M"] / doc["K"])
    if algo == "alg2" and doc["epsilon"] is None:
        T = max(config.T, 2)
        doc.update(epsilon=float(T) ** -2, delta=1.0 / T)
    return Params(**doc)


def build_policy(config: RunConfig, params: Params, problem=None):
    n = config.n
    algo = config.algo
    if isinstance(problem, ABProblem):
        cfg = ABConfig(M=problem.config.M, cost_schedule=problem.config.cost_schedule, K=params.K)
        return ABPolicy(n, cfg, params.eta, params.gamma)
    if algo == "alg1":
        return MonotonicPolicy(MonotonicParams(n=n, K=params.K, eta=params.eta, gamma=params.gamma))
    if algo == "alg2":
        return ConcavePolicy(ConcaveParams(n=n, K=params.K, eta=params.eta, epsilon=params.epsilon,
                                           delta=params.delta, gamma=params.gamma, m=params.m or 256))
    if algo == "joint":
        return JointExp3(n, params.K, params.eta)
    if algo == "uniform":
        return UniformPolicy(n)
    if algo == "fixed":
        ov = config.overrides
        if "costs" not in ov or "price" not in ov:
            raise ConfigError("fixed policy needs 'costs' and 'price' in overrides", "overrides.costs")
        return FixedPolicy(Action(costs=np.broadcast_to(np.asarray(ov["costs"], float), (n,)),
                                  price=ov["price"]))
    raise ConfigError(f"unknown algorithm {algo!r}", "algo")


# --- episodes ------------------------------------------------------------

@dataclass
class EpisodeResult:
    seed: int
    profit: float
    expected_profit: float | None = None
    trace: np.ndarray | None = None


def seed_streams(seed):
    """Independent policy and environment generators derived from one seed."""
    policy_ss, env_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(policy_ss), np.random.default_rng(env_ss)


class Episode:
    """A resumable run of one policy against one environment."""

    def __init__(self, config: RunConfig, seed: int, params: Params | None = None,
                 env: Environment | None = None, problem=None):
        self.config = config
        self.seed = int(seed)
        self.params = params or resolve_params(config)
        self.env = env or build_environment(config.env, config.n, config.T)
        if self.env.n != config.n:
            raise DimensionError(f"environment has {self.env.n} markets, config says n={config.n}")
        base_problem = problem or build_problem(config.variant, config.n, config.T)
        self.problem = base_problem.fresh()
        self.policy = build_policy(config, self.params, self.problem)
        self.policy_rng, self.env_rng = seed_streams(seed)
        self.t = 1
        self.profit = 0.0
        self.expected = 0.0
        self.trace = [] if config.keep_trace else None

    def step(self):
        t = self.t
        action = self.policy.sample_action(self.policy_rng)
        chosen = self.policy.last
        demands = self.env.sample(t, action, self.env_rng)
        loss = self.problem.loss(t, action, demands)
        gained = self.problem.record(t, action, demands, loss)
        self.policy.update(chosen, loss)
        self.profit += gained
        if self.config.variance_reduced:
            self.expected += self.problem.expected_profit(self.env, t, action)
        if self.trace is not None:
            self.trace.append(gained)
        self.t += 1

    def run(self, until=None):
        stop = self.config.T if until is None else min(until, self.config.T)
        while self.t <= stop:
            self.step()
        return self

    def result(self) -> EpisodeResult:
        return EpisodeResult(
            seed=self.seed,
            profit=self.profit,
            expected_profit=self.expected if self.config.variance_reduced else None,
            trace=None if self.trace is None else np.asarray(self.trace),
        )

    # checkpointing -------------------------------------------------------
    def to_dict(self):
        doc = {
            "format": "profitbandit.episode",
            "version": 1,
            "config": self.config.to_dict(),
            "params": asdict(self.params),
            "seed": self.seed,
            "t": self.t,
            "profit": self.profit,
            "expected": self.expected,
            "policy": self.policy.to_dict(),
            "policy_rng": self.policy_rng.bit_generator.state,
            "env_rng": self.env_rng.bit_generator.state,
        }
        if self.trace is not None:
            doc["trace"] = list(self.trace)
        ledger = getattr(self.problem, "ledger", None)
        if ledger is not None:
            doc["ledger"] = {"active": ledger.active.tolist(), "revenue_rate": ledger.revenue_rate.tolist(),
                             "cumulative_profit": ledger.cumulative_profit.tolist()}
        return doc

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != "profitbandit.episode" or doc.get("version") != 1:
            raise ParameterError("not a version-1 episode checkpoint")
        config = config_from_dict(doc["config"])
        ep = cls(config, doc["seed"], Params(**doc["params"]))
        ep.policy = type(ep.policy).from_dict(doc["policy"])
        ep.policy_rng.bit_generator.state = doc["policy_rng"]
        ep.env_rng.bit_generator.state = doc["env_rng"]
        ep.t, ep.profit, ep.expected = int(doc["t"]), float(doc["profit"]), float(doc["expected"])
        if "trace" in doc:
            ep.trace = list(doc["trace"])
        if "ledger" in doc:
            ledger = ep.problem.ledger
            for key, value in doc["ledger"].items():
                setattr(ledger, key, np.asarray(value, dtype=np.float64))
        return ep


def run_episode(config: RunConfig, seed=None, params=None, env=None, problem=None) -> EpisodeResult:
    seed = config.seeds[0] if seed is None else seed
    return Episode(config, seed, params, env, problem).run().result()


# --- hindsight optimum ------------------------------------------------------

@dataclass(frozen=True)
class OptResult:
    value: float
    price: float
    choices: tuple  # best cost (or alternative) per market at that price


def unit_grid(G):
    return np.arange(G, dtype=np.float64) / (G - 1)


def _market_table(env, i, costs, prices, weights, chunk=256):
    """Summed expected demand, shape (len(prices), len(costs))."""
    out = np.empty((prices.shape[0], costs.shape[0]))
    for lo in range(0, prices.shape[0], chunk):
        pp = prices[lo:lo + chunk, None]
        out[lo:lo + chunk] = env.expected_demand_sum(i, costs[None, :], pp, weights)
    return out


def estimate_opt(env: Environment, T: int, resolution=DEFAULT_RESOLUTION, problem=None,
                 prices=None, costs=None, warn=True) -> OptResult:
    """Grid maximum of the summed expected profit over fixed (costs, price).

    For each price every market's cost is optimized on its own, then the
    best price is taken.  ``prices``/``costs`` replace the default uniform
    grid of ``resolution`` points.
    """
    if not hasattr(env, "oracle_mean"):
        raise ParameterError("environment exposes no expected-demand oracle")
    if T == 0:
        return OptResult(0.0, 0.0, tuple([0.0] * env.n))
    problem = problem or CoreProblem()
    if isinstance(problem, ABProblem):
        return estimate_opt_ab(env, T, problem, resolution=resolution, prices=prices)
    prices = unit_grid(resolution) if prices is None else np.asarray(prices, dtype=np.float64)
    costs = unit_grid(resolution) if costs is None else np.asarray(costs, dtype=np.float64)
    rev_w, cost_w = problem.revenue_weights(T, env.n)
    total = np.zeros(prices.shape[0])
    best = []
    for i in range(env.n):
        demand = _market_table(env, i, costs, prices, rev_w[i])
        obj = prices[:, None] * demand - cost_w[i] * costs[None, :]
        j = np.argmax(obj, axis=1)
        total += obj[np.arange(prices.shape[0]), j]
        best.append(j)
    k = int(np.argmax(total))
    result = OptResult(float(total[k]), float(prices[k]), tuple(float(costs[b[k]]) for b in best))
    lip = getattr(env, "lipschitz", None)
    if warn and lip is not None and prices.shape[0] > 1:
        err = env.n * T * (lip() + 1.0) / (prices.shape[0] - 1)
        if err > 0.01 * abs(result.value):
            warnings.warn(f"grid error bound {err:.3g} exceeds 1% of OPT {result.value:.3g}; raise the resolution",
                          RuntimeWarning, stacklevel=2)
    return result


def estimate_opt_ab(env, T, problem: ABProblem, resolution=DEFAULT_RESOLUTION, prices=None) -> OptResult:
    prices = unit_grid(resolution) if prices is None else np.asarray(prices, dtype=np.float64)
    M = problem.config.M
    cost_sum = np.zeros(M)
    for t in range(1, T + 1):
        cost_sum += problem.config.costs_at(t)
    total = np.zeros(prices.shape[0])
    best = []
    for i in range(env.n):
        obj = np.empty((prices.shape[0], M))
        for m in range(M):
            demand = env.expected_demand_sum(i, m, prices, np.ones(T))
            obj[:, m] = prices * demand - cost_sum[m]
        j = np.argmax(obj, axis=1)
        total += obj[np.arange(prices.shape[0]), j]
        best.append(j)
    k = int(np.argmax(total))
    return OptResult(float(total[k]), float(prices[k]), tuple(int(b[k]) for b in best))


def estimate_opt_joint(env, T, grid, problem=None) -> float:
    """Exhaustive search over the product grid; exponential in ``n``, for checking only."""
    problem = problem or CoreProblem()
    grid = np.asarray(grid, dtype=np.float64)
    rev_w, cost_w = problem.revenue_weights(T, env.n)
    best = -np.inf
    for p in grid:
        for cs in itertools.product(grid, repeat=env.n):
            v = sum(p * env.expected_demand_sum(i, c, p, rev_w[i]) - cost_w[i] * c for i, c in enumerate(cs))
            best = max(best, float(v))
    return best


def discretization_gap(env, T, K, resolution=DEFAULT_RESOLUTION, problem=None):
    """Fine-grid OPT minus the OPT restricted to the grid ``{0, 1/K, ..., 1}``."""
    fine = estimate_opt(env, T, resolution, problem).value
    coarse = estimate_opt(env, T, problem=problem, prices=unit_grid(K + 1), costs=unit_grid(K + 1),
                          warn=False).value
    return fine - coarse


# --- regret and sweeps --------------------------------------------------------

def regret(profits, opt):
    """``(OPT - mean, SE)``; SE is ``nan`` with fewer than two runs."""
    profits = np.asarray(profits, dtype=np.float64)
    if profits.size == 0:
        raise ParameterError("no runs to average")
    mean = profits.mean()
    se = profits.std(ddof=1) / math.sqrt(profits.size) if profits.size > 1 else float("nan")
    return float(opt - mean), float(se)


@dataclass
class RunResult:
    config: RunConfig
    params: Params
    opt: float
    episodes: list
    regret: float
    se: float

    @property
    def profits(self):
        return np.array([e.profit for e in self.episodes])

    def rows(self):
        cfg, prm = self.config, self.params
        run_id = content_hash({"config": cfg.to_dict(), "version": __version__})[:12]
        out = []
        for ep in self.episodes:
            alg = ep.expected_profit if cfg.variance_reduced else ep.profit
            out.append({
                "run_id": run_id, "algo": cfg.algo, "env": cfg.env["kind"],
                "variant": cfg.variant.get("kind", "core"), "n": cfg.n, "T": cfg.T,
                "K": prm.K, "eta": prm.eta, "gamma": prm.gamma, "epsilon": prm.epsilon,
                "delta": prm.delta, "m": prm.m, "seed": ep.seed,
                "alg_profit": alg, "opt": self.opt, "regret": self.opt - alg,
            })
        return out


THREADS_ENV = "PROFITBANDIT_THREADS"


def worker_count(default=1):
    """Thread count for seed-level parallelism; the environment variable wins."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return max(1, int(default))
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}", THREADS_ENV) from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be positive, got {value}", THREADS_ENV)
    return value


def run(config: RunConfig, threads=1) -> RunResult:
    """All seeds of one configuration, plus the hindsight optimum.

    Seeds are independent, so with ``threads > 1`` they run concurrently;
    results are collected in seed order either way.
    """
    params = resolve_params(config)
    env = build_environment(config.env, config.n, config.T)
    problem = build_problem(config.variant, config.n, config.T)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        opt = estimate_opt(env, config.T, config.resolution, problem).value
    def one(seed):
        return Episode(config, seed, params, env, problem).run().result()

    workers = worker_count(threads)
    if workers > 1 and len(config.seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            episodes = list(pool.map(one, config.seeds))
    else:
        episodes = [one(s) for s in config.seeds]
    values = [e.expected_profit if config.variance_reduced else e.profit for e in episodes]
    r, se = regret(values, opt)
    return RunResult(config, params, opt, episodes, r, se)


@dataclass
class SlopeFit:
    slope: float | None
    intercept: float | None
    residuals: list
    used: list
    excluded: list
    slope_se: float | None = None

    def ci(self, z=1.96):
        if self.slope is None or self.slope_se is None:
            return None
        return (self.slope - z * self.slope_se, self.slope + z * self.slope_se)


def fit_slope(Ts, regrets, ses=None, floor_se=SLOPE_FLOOR_SE) -> SlopeFit:
    """Least-squares slope of ``ln R`` against ``ln T``.

    Points with nonpositive regret, or regret below ``floor_se`` standard
    errors, are dropped and listed in ``excluded``.
    """
    Ts = np.asarray(Ts, dtype=np.float64)
    R = np.asarray(regrets, dtype=np.float64)
    S = np.zeros_like(R) if ses is None else np.nan_to_num(np.asarray(ses, dtype=np.float64))
    keep = (R > 0) & (R >= floor_se * S)
    used = [int(T) for T in Ts[keep]]
    excluded = [int(T) for T in Ts[~keep]]
    if keep.sum() < 2:
        return SlopeFit(None, None, [], used, excluded)
    x, y = np.log(Ts[keep]), np.log(R[keep])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    slope_se = None
    if x.size > 2:
        slope_se = float(math.sqrt(resid @ resid / (x.size - 2) / np.sum((x - x.mean()) ** 2)))
    return SlopeFit(float(slope), float(intercept), resid.tolist(), used, excluded, slope_se)


@dataclass
class SweepResult:
    Ts: list
    results: list
    fit: SlopeFit

    @property
    def regrets(self):
        return [r.regret for r in self.results]

    @property
    def ses(self):
        return [r.se for r in self.results]

    def rows(self):
        return [row for r in self.results for row in r.rows()]

    def summary(self):
        return {
            "points": [{"T": T, "regret": r.regret, "se": r.se, "opt": r.opt} for T, r in zip(self.Ts, self.results)],
            "slope": self.fit.slope, "intercept": self.fit.intercept, "slope_se": self.fit.slope_se,
            "residuals": self.fit.residuals, "used_T": self.fit.used, "excluded_T": self.fit.excluded,
            "floor": f"regret >= {SLOPE_FLOOR_SE:g} * SE and > 0",
        }


def sweep_T(template: RunConfig, Ts, seeds=None, threads=1) -> SweepResult:
    """Regret at each horizon with parameters re-derived per horizon."""
    if seeds is not None:
        template = RunConfig(**{**template.to_dict(), "seeds": tuple(seeds)})
    results = [run(template.with_T(T), threads) for T in Ts]
    fit = fit_slope(Ts, [r.regret for r in results], [r.se for r in results]) if len(Ts) >= 2 else \
        SlopeFit(None, None, [], [], [int(T) for T in Ts])
    return SweepResult(list(Ts), results, fit)


# --- output ------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(rows))


def write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
