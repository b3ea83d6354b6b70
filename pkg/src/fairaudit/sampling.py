"""Data-collection strategies under a fixed expected sample budget.

Two plans are supported:

* Weighted: draw n i.i.d. group labels from a power-tilted marginal
  v_g = w_g^eta / sum w^eta; joint counts are multinomial so each M_g is
  marginally Binomial(n, v_g) and the counts sum to n exactly.
* Attribute-specific: independently per group, draw a fixed block of
  n/gamma samples with probability min(gamma * w_g, 1), else none.

Both plans expose the inclusion probabilities P[M_g >= 1] and P[M_g >= 2]
that normalize the debiased estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import GroupWeights
from .errors import EstimatorUndefined

# Weighted-plan tilt exponent that optimizes the sample-complexity bound.
OPTIMAL_ETA = 2.0 / 3.0


def weighted_marginal(w: GroupWeights, eta: float) -> GroupWeights:
    """Power-tilted sampling marginal v_g = w_g^eta / sum_g' w_g'^eta.

    eta=0 gives the uniform distribution over the support of w, eta=1 the
    population marginal itself.
    """
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    arr = w.as_array()
    if not np.any(arr > 0):
        raise ValueError("weights have empty support")
    v = np.where(arr > 0, arr, 0.0) ** eta if eta > 0 else (arr > 0).astype(float)
    return GroupWeights(v / v.sum())


@dataclass(frozen=True)
class WeightedPlan:
    """i.i.d. sampling of n group labels from marginal v."""

    v: GroupWeights
    budget: int
    eta: float | None = None  # tilt used to build v, if any (informational)

    def __post_init__(self):
        if self.budget < 0 or self.budget != int(self.budget):
            raise ValueError(f"budget must be a non-negative integer, got {self.budget}")

    @staticmethod
    def from_weights(w: GroupWeights, eta: float, budget: int) -> "WeightedPlan":
        return WeightedPlan(v=weighted_marginal(w, eta), budget=budget, eta=eta)

    @property
    def k(self) -> int:
        return self.v.k

    def draw_counts(self, rng: np.random.Generator) -> np.ndarray:
        return rng.multinomial(self.budget, self.v.as_array())

    def inclusion_probabilities(self) -> list[tuple[float, float]]:
        n = self.budget
        out = []
        for vg in self.v.w:
            out.append(_binomial_inclusion(n, vg))
        return out


def _binomial_inclusion(n: int, v: float) -> tuple[float, float]:
    """(P[Bin(n,v) >= 1], P[Bin(n,v) >= 2]) computed without cancellation."""
    if v <= 0.0 or n == 0:
        return (0.0, 0.0)
    if v >= 1.0:
        return (1.0, 1.0 if n >= 2 else 0.0)
    log_q = math.log1p(-v)  # log(1 - v)
    p_ge1 = -math.expm1(n * log_q)  # 1 - (1-v)^n
    p_ge2 = p_ge1 - n * v * math.exp((n - 1) * log_q)
    return (p_ge1, max(0.0, p_ge2))


@dataclass(frozen=True)
class AttributeSpecificPlan:
    """Per-group block sampling: M_g = n/gamma with probability min(gamma*w_g, 1)."""

    w: GroupWeights
    budget: int
    gamma: float

    def __post_init__(self):
        if self.budget <= 0 or self.budget != int(self.budget):
            raise ValueError(f"budget must be a positive integer, got {self.budget}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        block = self.budget / self.gamma
        # The per-group draw count must be a whole number; rounding silently
        # would corrupt the budget identity sum_g E[M_g] = n.
        if abs(block - round(block)) > 1e-9 or round(block) < 1:
            raise ValueError(f"n/gamma must be a positive integer, got {block}")

    @staticmethod
    def default(w: GroupWeights, budget: int) -> "AttributeSpecificPlan":
        return AttributeSpecificPlan(w=w, budget=budget, gamma=budget / 2)

    @property
    def k(self) -> int:
        return self.w.k

    @property
    def block(self) -> int:
        """Number of samples drawn from each included group."""
        return int(round(self.budget / self.gamma))

    def include_probs(self) -> np.ndarray:
        return np.minimum(self.gamma * self.w.as_array(), 1.0)

    def draw_counts(self, rng: np.random.Generator) -> np.ndarray:
        include = rng.random(self.k) < self.include_probs()
        return np.where(include, self.block, 0)

    def inclusion_probabilities(self) -> list[tuple[float, float]]:
        if self.block < 2:
            raise EstimatorUndefined(
                "attribute-specific plan with n/gamma < 2 can never observe a group twice"
            )
        return [(float(p), float(p)) for p in self.include_probs()]


SamplingPlan = WeightedPlan | AttributeSpecificPlan


def draw_counts(plan: SamplingPlan, rng: np.random.Generator) -> np.ndarray:
    """Draw one realization of per-group sample counts M_g."""
    return plan.draw_counts(rng)


def inclusion_probabilities(plan: SamplingPlan) -> list[tuple[float, float]]:
    """Exact (P[M_g >= 1], P[M_g >= 2]) per group for the plan."""
    return plan.inclusion_probabilities()


@lru_cache(maxsize=256)
def inclusion_array(plan: SamplingPlan) -> np.ndarray:
    """inclusion_probabilities as a cached read-only (K, 2) array."""
    arr = np.asarray(plan.inclusion_probabilities(), dtype=float)
    arr.flags.writeable = False
    return arr


def satisfies_tail_lemma(plan: WeightedPlan) -> list[bool | None]:
    """Check the binomial tail lower bounds per group.

    For groups with n*v_g <= 1 and n >= 2, verifies
    P[M_g >= 1] >= n v_g / e and P[M_g >= 2] >= n^2 v_g^2 / (4e).
    Groups outside the hypotheses are reported as None (vacuous).
    """
    if not isinstance(plan, WeightedPlan):
        raise TypeError("tail lemma applies to weighted plans only")
    n = plan.budget
    report: list[bool | None] = []
    for vg, (p1, p2) in zip(plan.v.w, plan.inclusion_probabilities()):
        if n < 2 or n * vg > 1:
            report.append(None)
        else:
            ok = p1 >= n * vg / math.e - 1e-15 and p2 >= (n * vg) ** 2 / (4 * math.e) - 1e-15
            report.append(bool(ok))
    return report
