"""Domain types shared by all modules.

Populations are modeled as a stochastic weight vector over K groups plus a
per-group Bernoulli mean for the binary quality-of-service loss.  Audit data
reduces to (group id, loss bit) pairs; everything else (features, raw labels)
is either dropped or carried opaquely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence

import numpy as np

from .errors import EmptyAfterConditioning, MissingGroup, WeightError

# Weight vectors must sum to 1 within this tolerance after normalization.
WEIGHT_SUM_TOL = 1e-12
# If the raw sum is off by at most this much we silently renormalize
# (tolerates text-parsed weights); beyond it we raise.
WEIGHT_RENORM_TOL = 1e-9


@dataclass(frozen=True)
class GroupWeights:
    """A stochastic vector w over dense group ids 0..K-1."""

    w: tuple[float, ...]

    def __init__(self, w: Sequence[float]):
        arr = np.asarray(w, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise WeightError("weights must be a non-empty 1-d sequence")
        if np.any(arr < 0):
            raise WeightError("weights must be non-negative")
        total = float(arr.sum())
        if abs(total - 1.0) > WEIGHT_RENORM_TOL:
            raise WeightError(f"weights sum to {total}, not 1")
        if total != 1.0:
            arr = arr / total
        object.__setattr__(self, "w", tuple(float(x) for x in arr))
        cached = np.asarray(self.w, dtype=float)
        cached.flags.writeable = False
        object.__setattr__(self, "_arr", cached)

    @property
    def k(self) -> int:
        return len(self.w)

    @staticmethod
    def uniform(k: int) -> "GroupWeights":
        return GroupWeights([1.0 / k] * k)

    def as_array(self) -> np.ndarray:
        return self._arr  # read-only view cached at construction

    def __len__(self) -> int:
        return len(self.w)

    def __getitem__(self, g: int) -> float:
        return self.w[g]


@dataclass(frozen=True)
class FairnessInstance:
    """Ground truth: group weights plus per-group Bernoulli loss means."""

    weights: GroupWeights
    mu: tuple[float, ...]

    def __init__(self, weights: GroupWeights, mu: Sequence[float]):
        mu_t = tuple(float(x) for x in mu)
        if len(mu_t) != weights.k:
            raise ValueError("mu length must match number of groups")
        for x in mu_t:
            if not (0.0 <= x <= 1.0):
                raise ValueError(f"group mean {x} outside [0, 1]")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "mu", mu_t)
        cached = np.asarray(mu_t, dtype=float)
        cached.flags.writeable = False
        object.__setattr__(self, "_mu_arr", cached)

    @property
    def k(self) -> int:
        return self.weights.k

    def mu_array(self) -> np.ndarray:
        return self._mu_arr  # read-only view cached at construction


@dataclass(frozen=True)
class AuditSample:
    """One observation: a group id and a binary loss."""

    group: int
    loss: int

    def __post_init__(self):
        if self.loss not in (0, 1):
            raise ValueError(f"loss must be 0 or 1, got {self.loss}")
        if self.group < 0:
            raise ValueError(f"group id must be non-negative, got {self.group}")


class MetricKind(Enum):
    """How raw classifier records map to binary losses."""

    EQUAL_OPPORTUNITY = "eo"  # loss = prediction, restricted to label-0 rows
    STATISTICAL_PARITY = "sp"  # loss = prediction, all rows


@dataclass(frozen=True)
class RawRecord:
    """A raw classifier record: group, true label, prediction, opaque payload."""

    group: int
    label: int
    prediction: int
    payload: Any = field(default=None, compare=False)

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.prediction not in (0, 1):
            raise ValueError(f"prediction must be 0 or 1, got {self.prediction}")


def records_to_samples(records: Sequence[RawRecord], kind: MetricKind) -> list[AuditSample]:
    """Convert raw records to audit samples under the chosen metric.

    Equal opportunity keeps only label-0 rows; statistical parity keeps all
    rows.  In both cases the loss bit is the prediction.
    """
    if kind is MetricKind.EQUAL_OPPORTUNITY:
        kept = [r for r in records if r.label == 0]
        if not kept:
            raise EmptyAfterConditioning("no records with label 0")
    else:
        kept = list(records)
    return [AuditSample(group=r.group, loss=r.prediction) for r in kept]


def empirical_instance(samples: Sequence[AuditSample], weights: GroupWeights) -> FairnessInstance:
    """Plug-in instance with per-group sample means (reporting helper only)."""
    k = weights.k
    counts = np.zeros(k, dtype=np.int64)
    sums = np.zeros(k, dtype=np.int64)
    for s in samples:
        if s.group >= k:
            raise ValueError(f"sample group {s.group} outside 0..{k - 1}")
        counts[s.group] += 1
        sums[s.group] += s.loss
    missing = [g for g in range(k) if weights[g] > 0 and counts[g] == 0]
    if missing:
        raise MissingGroup(missing)
    mu = [sums[g] / counts[g] if counts[g] > 0 else 0.0 for g in range(k)]
    return FairnessInstance(weights, mu)
