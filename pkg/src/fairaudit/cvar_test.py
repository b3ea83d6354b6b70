"""The threshold audit test, end to end.

Draw per-group counts from a sampling plan, draw losses, compute the debiased
statistic F, and decide H1 (unfair at level epsilon) iff
F >= (1 - alpha) * epsilon^2 / 2, with ties deciding H1.

The threshold sits halfway between the two composite regions: instances with
zero CVaR fairness have separation statistic D = 0, while instances with CVaR
fairness >= epsilon have D >= (1 - alpha) * epsilon^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import AuditSample, FairnessInstance, GroupWeights, MetricKind
from .errors import PlanMismatch
from .estimator import EstimatorValue, estimate_from_counts
from .metrics import CVaRMode, cvar_fairness
from .sampling import AttributeSpecificPlan, SamplingPlan, WeightedPlan, inclusion_array

# Numeric tolerance used when classifying instances into the composite regions.
REGION_TOL = 1e-12


class Decision(Enum):
    H0 = "H0"
    H1 = "H1"


class Region(Enum):
    P0 = "P0"
    P1 = "P1"
    NEITHER = "Neither"


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest test class despite the name

    alpha: float
    epsilon: float
    plan: SamplingPlan
    metric: MetricKind | None = None

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        tau = self.threshold
        if not (0.0 < tau <= 0.5):
            raise ValueError(f"threshold {tau} outside (0, 0.5]; epsilon too large?")

    @property
    def threshold(self) -> float:
        return (1.0 - self.alpha) * self.epsilon * self.epsilon / 2.0


@dataclass(frozen=True, eq=False)
class TestOutcome:
    __test__ = False  # not a pytest test class despite the name

    decision: Decision
    statistic: EstimatorValue
    threshold: float
    counts: np.ndarray  # per-group sample counts M_g


def _decide(stat: EstimatorValue, threshold: float) -> Decision:
    # Tie at the threshold decides H1 (the rule is ">=").
    return Decision.H1 if stat.f >= threshold else Decision.H0


def run_test_synthetic(
    inst: FairnessInstance, cfg: TestConfig, rng: np.random.Generator
) -> TestOutcome:
    """Run one audit on a known instance with freshly sampled data.

    Counts are drawn from the plan; per-group losses are i.i.d.
    Bernoulli(mu_g), realized through their sufficient one-counts.
    Deterministic given the generator state.
    """
    plan = cfg.plan
    if plan.k != inst.k:
        raise ValueError("plan and instance disagree on K")
    incl = inclusion_array(plan)
    m = plan.draw_counts(rng)
    s = rng.binomial(m, inst.mu_array())
    stat = estimate_from_counts(s, m, inst.weights, incl)
    return TestOutcome(
        decision=_decide(stat, cfg.threshold),
        statistic=stat,
        threshold=cfg.threshold,
        counts=np.asarray(m, dtype=np.int64),
    )


def run_test_dataset(
    samples: Sequence[AuditSample], w: GroupWeights, cfg: TestConfig
) -> TestOutcome:
    """Run the audit on externally collected samples.

    The caller asserts that the data were collected per cfg.plan; counts are
    derived from the data and validated against the plan where possible.
    """
    plan = cfg.plan
    k = w.k
    m = [0] * k
    s = [0] * k
    for sample in samples:
        if sample.group >= k:
            raise ValueError(f"sample group {sample.group} outside 0..{k - 1}")
        m[sample.group] += 1
        s[sample.group] += sample.loss
    if isinstance(plan, WeightedPlan):
        if sum(m) != plan.budget:
            raise PlanMismatch(
                f"weighted plan draws exactly n={plan.budget} samples, observed {sum(m)}"
            )
    elif isinstance(plan, AttributeSpecificPlan):
        block = plan.block
        bad = [g for g in range(k) if m[g] not in (0, block)]
        if bad:
            raise PlanMismatch(
                f"attribute-specific counts must be 0 or {block}; groups {bad} violate this"
            )
    incl = inclusion_array(plan)
    stat = estimate_from_counts(s, m, w, incl)
    return TestOutcome(
        decision=_decide(stat, cfg.threshold),
        statistic=stat,
        threshold=cfg.threshold,
        counts=np.asarray(m, dtype=np.int64),
    )


def classify_region(inst: FairnessInstance, alpha: float, epsilon: float) -> Region:
    """Place an instance into P0 (CVaR = 0), P1 (CVaR >= epsilon), or Neither."""
    value = cvar_fairness(inst, alpha, CVaRMode.FRACTIONAL)
    if value <= REGION_TOL:
        return Region.P0
    if value >= epsilon - REGION_TOL:
        return Region.P1
    return Region.NEITHER
