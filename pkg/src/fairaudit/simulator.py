"""Monte Carlo harness for estimating the audit test's error probability.

Error probability is the equal-prior average of the two conditional errors:
p = (Pr[H1 | fair instance] + Pr[H0 | unfair instance]) / 2.  Trials are
seeded as base_seed + trial_index (separate odd/even streams per side), so
results are identical no matter how trials are distributed across workers.

Worker count is capped by the FAIRAUDIT_THREADS environment variable; trials
are reduced in trial-index order regardless of scheduling.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import FairnessInstance
from .cvar_test import Decision, Region, TestConfig, classify_region, run_test_synthetic
from .errors import ConfigError

THREADS_ENV = "FAIRAUDIT_THREADS"


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


@dataclass(frozen=True)
class ErrorEstimate:
    p_err_hat: float
    stderr: float
    trials: int
    frac_h1_given_h0: float
    frac_h0_given_h1: float
    config: dict = field(default_factory=dict, compare=False)


def _side_fraction(
    inst: FairnessInstance,
    cfg: TestConfig,
    trials: int,
    base_seed: int,
    offset: int,
    want: Decision,
) -> float:
    """Fraction of trials deciding `want`, seeds base_seed + 2*i + offset."""

    def run_chunk(indices: Sequence[int]) -> int:
        hits = 0
        for i in indices:
            rng = np.random.default_rng(base_seed + 2 * i + offset)
            if run_test_synthetic(inst, cfg, rng).decision is want:
                hits += 1
        return hits

    workers = _worker_count()
    if workers == 1:
        return run_chunk(range(trials)) / trials
    chunks = [range(j, trials, workers) for j in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        totals = list(pool.map(run_chunk, chunks))
    return sum(totals) / trials


def estimate_error(
    h0_inst: FairnessInstance,
    h1_inst: FairnessInstance,
    cfg: TestConfig,
    trials: int,
    base_seed: int,
) -> ErrorEstimate:
    """Monte Carlo estimate of the equal-prior error probability.

    Requires h0_inst to lie in P0 and h1_inst in P1(epsilon) at cfg's alpha;
    otherwise the error probability is not the quantity the bounds control.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if classify_region(h0_inst, cfg.alpha, cfg.epsilon) is not Region.P0:
        raise ConfigError("h0 instance does not have zero CVaR fairness")
    if classify_region(h1_inst, cfg.alpha, cfg.epsilon) is not Region.P1:
        raise ConfigError("h1 instance does not have CVaR fairness >= epsilon")
    frac_h1_h0 = _side_fraction(h0_inst, cfg, trials, base_seed, 0, Decision.H1)
    frac_h0_h1 = _side_fraction(h1_inst, cfg, trials, base_seed, 1, Decision.H0)
    p_hat = (frac_h1_h0 + frac_h0_h1) / 2.0
    return ErrorEstimate(
        p_err_hat=p_hat,
        stderr=math.sqrt(p_hat * (1.0 - p_hat) / trials),
        trials=trials,
        frac_h1_given_h0=frac_h1_h0,
        frac_h0_given_h1=frac_h0_h1,
    )


@dataclass(frozen=True)
class SweepPoint:
    """One grid point of a sweep: an axis value and everything needed to run it."""

    axis_value: float
    h0: FairnessInstance
    h1: FairnessInstance
    cfg: TestConfig


@dataclass(frozen=True)
class Experiment:
    """A sweep along one axis (typically the budget n).

    `points` are evaluated in order; when the axis is a budget sweep,
    `n_hat` of the resulting table is the smallest axis value whose
    estimated error is <= target.
    """

    axis: str
    points: tuple[SweepPoint, ...]
    trials: int
    base_seed: int
    target: float = 0.1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.points:
            raise ConfigError("sweep grid must be non-empty")


@dataclass(frozen=True)
class SweepResult:
    axis: str
    rows: tuple[tuple[float, ErrorEstimate], ...]
    n_hat: float | None  # smallest axis value with p_hat <= target (if axis is n)
    target: float


def threshold_sweep(exp: Experiment) -> SweepResult:
    """Evaluate every grid point; deterministic given base_seed."""
    rows = []
    n_hat = None
    for point in exp.points:
        est = estimate_error(point.h0, point.h1, point.cfg, exp.trials, exp.base_seed)
        rows.append((point.axis_value, est))
        if n_hat is None and est.p_err_hat <= exp.target:
            n_hat = point.axis_value
    return SweepResult(axis=exp.axis, rows=tuple(rows), n_hat=n_hat, target=exp.target)


def write_sweep_csv(result: SweepResult, path: str) -> None:
    """Write the sweep table; formatting is fixed so reruns are byte-identical."""
    lines = [f"{result.axis},p_err_hat,stderr,frac_h1_given_h0,frac_h0_given_h1,trials,n_hat"]
    n_hat_repr = "" if result.n_hat is None else repr(result.n_hat)
    for axis_value, est in result.rows:
        lines.append(
            f"{axis_value!r},{est.p_err_hat!r},{est.stderr!r},"
            f"{est.frac_h1_given_h0!r},{est.frac_h0_given_h1!r},{est.trials},{n_hat_repr}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(path: str, config: dict, base_seed: int) -> None:
    """Write a JSON run manifest with a content hash of the configuration."""
    payload = json.dumps(config, sort_keys=True)
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    manifest = {"base_seed": base_seed, "config": config, "config_sha256": digest}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
