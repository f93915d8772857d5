"""Detection-rate bookkeeping for Monte Carlo campaigns."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from scipy.stats import binomtest


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def within_sigma(successes: int, trials: int, p: float, k: float = 3.0) -> bool:
    """Empirical rate within ``k`` binomial standard errors of ``p``.

    At p in {0, 1} the standard error vanishes and the count must match exactly.
    """
    rate = successes / trials
    return abs(rate - p) <= k * binomial_stderr(p, trials) + 1e-12


@dataclass
class DetectionStats:
    trials: int = 0
    detected: int = 0
    stages: Counter = field(default_factory=Counter)

    def record(self, stage: str | None) -> None:
        self.trials += 1
        if stage is not None:
            self.detected += 1
            self.stages[stage] += 1

    def merge(self, other: "DetectionStats") -> "DetectionStats":
        return DetectionStats(
            self.trials + other.trials,
            self.detected + other.detected,
            self.stages + other.stages,
        )

    @property
    def rate(self) -> float:
        return self.detected / self.trials if self.trials else 0.0

    def wilson(self, confidence: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.detected, self.trials, confidence)

    def count_at(self, stage: str) -> int:
        return self.stages.get(stage, 0)
