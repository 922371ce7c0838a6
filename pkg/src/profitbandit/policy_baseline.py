"""Comparison policies: EXP3 over the joint product grid, fixed and uniform play."""

from __future__ import annotations

import numpy as np

from .core import Action, NormalizedLoss, ParameterError, PoisonedStateError, make_price_grid
from .hedge import normalize_log, sample_index
from .policy_monotonic import CHECKPOINT_VERSION

DEFAULT_ARM_CAP = 10**6


class CombinatorialBlowupError(ParameterError):
    """The joint grid has more arms than the configured cap."""


class JointExp3:
    """Plain EXP3 whose arms are all ``(K+1)^(n+1)`` grid tuples ``(c_1, ..., c_n, p)``.

    Arm index is mixed radix with base ``K+1`` and the price in the lowest
    digit: ``index = p + (K+1)*c_1 + (K+1)^2*c_2 + ...``.  The round loss
    ``l_t`` in ``[0, n]`` is divided by ``n`` before the update.
    """

    kind = "joint_exp3"

    def __init__(self, n, K, eta, arm_cap=DEFAULT_ARM_CAP):
        self.n, self.K, self.eta = int(n), int(K), float(eta)
        if self.n < 1 or self.K < 1:
            raise ParameterError("joint EXP3 needs n >= 1 and K >= 1")
        if not self.eta > 0:
            raise ParameterError(f"learning rate must be positive, got {eta}")
        self.base = self.K + 1
        self.n_arms = self.base ** (self.n + 1)
        if self.n_arms > arm_cap:
            raise CombinatorialBlowupError(
                f"joint grid has (K+1)^(n+1) = {self.base}^{self.n + 1} = {self.n_arms} arms, "
                f"above the cap of {arm_cap}"
            )
        self.grid = make_price_grid(self.K)
        self.logweights = np.full(self.n_arms, -np.log(self.n_arms))
        self._probs = np.exp(self.logweights)
        self.round = 1
        self.last = None
        self.poisoned = False

    @property
    def probs(self):
        return self._probs

    def tuple_of(self, index):
        """Arm index -> (cost indices, price index)."""
        digits = []
        for _ in range(self.n + 1):
            index, d = divmod(index, self.base)
            digits.append(d)
        return tuple(digits[1:]), digits[0]

    def index_of(self, cost_indices, price_index):
        index = 0
        for d in reversed(cost_indices):
            index = index * self.base + d
        return index * self.base + price_index

    def sample_action(self, rng) -> Action:
        arm = sample_index(self._probs, rng)
        self.last = arm
        costs, price = self.tuple_of(arm)
        return Action(costs=self.grid.points[list(costs)], price=self.grid.points[price])

    def update(self, arm, losses: NormalizedLoss):
        if self.poisoned:
            raise PoisonedStateError("policy state was poisoned by an earlier non-finite loss")
        loss = losses.total / self.n
        if not np.isfinite(loss):
            self.poisoned = True
            raise PoisonedStateError(f"non-finite loss {loss}")
        logw = self.logweights.copy()
        logw[arm] -= self.eta * loss / self._probs[arm]
        self.logweights = normalize_log(logw)
        self._probs = np.exp(self.logweights)
        self.round += 1

    def to_dict(self):
        return {"format": "profitbandit.policy", "version": CHECKPOINT_VERSION, "kind": self.kind,
                "params": {"n": self.n, "K": self.K, "eta": self.eta},
                "round": self.round, "logweights": self.logweights.tolist()}

    @classmethod
    def from_dict(cls, doc):
        if doc.get("version") != CHECKPOINT_VERSION:
            raise ParameterError(f"unsupported checkpoint version {doc.get('version')}")
        obj = cls(**doc["params"])
        obj.round = int(doc["round"])
        obj.logweights = normalize_log(np.asarray(doc["logweights"], dtype=np.float64))
        obj._probs = np.exp(obj.logweights)
        return obj


def joint_init(n, K, eta, arm_cap=DEFAULT_ARM_CAP) -> JointExp3:
    return JointExp3(n, K, eta, arm_cap)


class FixedPolicy:
    """Plays the same action every round."""

    kind = "fixed"

    def __init__(self, action: Action):
        self.action = action
        self.n = action.n
        self.last = None

    def sample_action(self, rng) -> Action:
        return self.action

    def update(self, chosen, losses):
        pass

    def to_dict(self):
        return {"format": "profitbandit.policy", "version": CHECKPOINT_VERSION, "kind": self.kind,
                "costs": self.action.costs.tolist(), "price": float(self.action.price)}

    @classmethod
    def from_dict(cls, doc):
        return cls(Action(costs=np.asarray(doc["costs"]), price=doc["price"]))


class UniformPolicy:
    """Draws price and every cost uniformly from [0, 1] each round."""

    kind = "uniform"

    def __init__(self, n):
        self.n = int(n)
        self.last = None

    def sample_action(self, rng) -> Action:
        draw = rng.random(self.n + 1)
        return Action(costs=draw[:-1], price=draw[-1])

    def update(self, chosen, losses):
        pass

    def to_dict(self):
        return {"format": "profitbandit.policy", "version": CHECKPOINT_VERSION, "kind": self.kind, "n": self.n}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["n"])


def fixed_policy(action: Action) -> FixedPolicy:
    return FixedPolicy(action)


def uniform_policy(n) -> UniformPolicy:
    return UniformPolicy(n)
