"""Binomial confidence intervals shared by the Monte-Carlo experiments."""

from __future__ import annotations

import math

from scipy.stats import binomtest


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def binomial_sigma(p: float, trials: int) -> float:
    """Standard error of a frequency, with ``p`` clipped away from 0 and 1."""
    p = min(max(p, 1.0 / trials), 1.0 - 1.0 / trials) if trials > 1 else 0.5
    return math.sqrt(p * (1.0 - p) / trials)
