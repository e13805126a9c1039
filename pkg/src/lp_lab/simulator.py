"""Seeded Monte-Carlo over the binary symmetric channel.

Trial ``t`` of a run with master seed ``s`` draws one uniform vector ``u``
from the stream ``(s, TRIAL, t)`` and flips bit ``i`` iff ``u_i < epsilon``.
Every crossover probability therefore reuses the same ``u``: error patterns
are nested in ``epsilon`` and all comparisons are paired per trial.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__, rng
from .errors import CapacityError, InvariantError, work_cap
from .gf2_tanner import TannerGraph, popcount
from .lp_core import channel_llr, lp_decode
from .stats import binomial_sigma, wilson_interval
from .witness import find_dual_witness, shifted_llr

HELP_CAP = 1_000_000
TARGET_WERS = (0.5, 0.1)


def to_prob(eps) -> Fraction:
    """Exact rational for a probability given as float, str or Fraction."""
    if isinstance(eps, float):
        return Fraction(repr(eps))
    return Fraction(eps)


@dataclass(frozen=True)
class ChannelConfig:
    epsilon: float
    trials: int
    master_seed: int

    def __post_init__(self):
        if not 0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 1/2)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def trial_seed(seed: int, t: int) -> int:
    return rng.child_seed(seed, rng.TRIAL, t)


def trial_uniforms(n: int, seed: int, t: int) -> np.ndarray:
    return rng.stream(seed, rng.TRIAL, t).random(n)


def word_below(u: np.ndarray, eps) -> int:
    """Word with bit ``i`` set iff ``u_i < eps``."""
    return sum(1 << int(i) for i in np.flatnonzero(u < float(eps)))


def bsc_sample(n: int, epsilon, seed: int) -> int:
    """I.i.d. Bernoulli(epsilon) error word of length ``n``."""
    if not 0 <= float(epsilon) < 0.5:
        raise ValueError("epsilon must lie in [0, 1/2)")
    return word_below(rng.stream(seed).random(n), epsilon)


def graph_hash(G: TannerGraph) -> str:
    return hashlib.sha256(G.to_json().encode()).hexdigest()


class Verdicts:
    """Memoised LP verdicts for one graph, keyed by received word and shift."""

    def __init__(self, G: TannerGraph, method: str = "lp"):
        if method not in ("lp", "witness"):
            raise ValueError("method must be 'lp' or 'witness'")
        self.G = G
        self.method = method
        self._memo: dict[tuple[int, Fraction], bool] = {}

    def success(self, y: int, shift=0) -> bool:
        """Whether a dual witness exists for ``(-1)^y + shift`` (equivalently LP success)."""
        shift = Fraction(shift)
        key = (y, shift)
        hit = self._memo.get(key)
        if hit is None:
            if self.method == "lp":
                gamma = channel_llr(y, self.G.n) if shift == 0 else shifted_llr(y, shift, self.G.n)
                hit = lp_decode(self.G, gamma).success
            else:
                hit = find_dual_witness(self.G, shifted_llr(y, shift, self.G.n)) is not None
            self._memo[key] = hit
        return hit


@dataclass(frozen=True)
class TrialReport:
    graph_id: str
    epsilon: float
    trials: int
    failures: int
    wer: float
    ci_lo: float
    ci_hi: float
    seeds: tuple[int, ...] = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.failures <= self.trials:
            raise InvariantError("failures out of range")


def _report(G: TannerGraph, eps, trials: int, fails: int, seed: int) -> TrialReport:
    lo, hi = wilson_interval(fails, trials)
    seeds = tuple(trial_seed(seed, t) for t in range(trials))
    return TrialReport(G.name or graph_hash(G)[:12], float(eps), trials, fails, fails / trials, lo, hi, seeds)


def _chunks(trials: int, jobs: int) -> list[range]:
    jobs = max(1, min(jobs, trials))
    step = math.ceil(trials / jobs)
    return [range(a, min(a + step, trials)) for a in range(0, trials, step)]


def _run_parallel(fn: Callable, args: list[tuple], jobs: int) -> list:
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*args)))


def _wer_chunk(G: TannerGraph, eps, seed: int, idx: range) -> list[bool]:
    V = Verdicts(G)
    out = []
    for t in idx:
        y = word_below(trial_uniforms(G.n, seed, t), eps)
        out.append(not V.success(y))
    return out


def wer_estimate(G: TannerGraph, epsilon, trials: int, seed: int, jobs: int = 1) -> TrialReport:
    """LP word error rate at ``epsilon`` with the all-zeros codeword sent."""
    ChannelConfig(float(epsilon), trials, seed)
    parts = _run_parallel(_wer_chunk, [(G, epsilon, seed, r) for r in _chunks(trials, jobs)], jobs)
    fails = sum(sum(p) for p in parts)
    return _report(G, epsilon, trials, fails, seed)


@dataclass(frozen=True)
class ThresholdEstimate:
    variant: str
    grid: tuple[float, ...]
    wer: tuple[float, ...]
    crossings: dict[float, float | None]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("epsilon grid must be strictly increasing")


def crossing(grid: Sequence[float], wer: Sequence[float], target: float) -> float | None:
    """First ``epsilon`` where the WER reaches ``target``, by linear interpolation.

    Returns ``None`` if the curve never reaches the target inside the grid.
    """
    for k in range(len(grid)):
        if wer[k] >= target:
            if k == 0:
                return float(grid[0]) if wer[0] == target else None
            a, b = wer[k - 1], wer[k]
            return float(grid[k - 1] + (target - a) * (grid[k] - grid[k - 1]) / (b - a))
    return None


@dataclass
class ScanResult:
    graph_id: str
    variants: list[str]
    reports: dict[tuple[str, float], TrialReport]
    estimates: dict[str, ThresholdEstimate]
    dominance_violations: int

    CSV_FIELDS = ("graph_id", "variant", "epsilon", "trials", "failures", "wer", "ci_lo", "ci_hi")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for (v, eps), r in self.reports.items():
            w.writerow([self.graph_id, v, repr(eps), r.trials, r.failures, repr(r.wer), repr(r.ci_lo), repr(r.ci_hi)])
        return buf.getvalue()


def _scan_chunk(variants: list[TannerGraph], grid: list, seed: int, idx: range) -> list[list[list[bool]]]:
    """``out[t][e][v]``: success of variant ``v`` at grid point ``e`` on trial ``t``."""
    Vs = [Verdicts(G) for G in variants]
    n = variants[0].n
    out = []
    for t in idx:
        u = trial_uniforms(n, seed, t)
        out.append([[V.success(word_below(u, eps)) for V in Vs] for eps in grid])
    return out


def threshold_scan(
    variants: Sequence[tuple[str, TannerGraph]],
    grid: Sequence,
    trials: int,
    seed: int,
    jobs: int = 1,
    strict: bool = True,
) -> ScanResult:
    """Paired WER curves for graph variants ordered from loosest to tightest polytope.

    Every trial checks that success on a variant implies success on each
    later one.  With ``strict`` a violation raises ``InvariantError``.
    """
    names = [v for v, _ in variants]
    graphs = [G for _, G in variants]
    if len({G.n for G in graphs}) != 1:
        raise ValueError("variants must share the block length")
    grid = list(grid)
    ThresholdEstimate("", tuple(float(e) for e in grid), (), {})
    parts = _run_parallel(_scan_chunk, [(graphs, grid, seed, r) for r in _chunks(trials, jobs)], jobs)
    rows = [row for p in parts for row in p]
    violations = 0
    for t, per_eps in enumerate(rows):
        for e, succ in enumerate(per_eps):
            for a in range(len(succ)):
                if succ[a] and not all(succ[a:]):
                    violations += 1
                    if strict:
                        raise InvariantError(f"dominance violated on trial {t} at epsilon {grid[e]}")
                    break
    reports: dict[tuple[str, float], TrialReport] = {}
    estimates: dict[str, ThresholdEstimate] = {}
    for v, (name, G) in enumerate(variants):
        wers = []
        for e, eps in enumerate(grid):
            fails = sum(1 for row in rows if not row[e][v])
            r = _report(G, eps, trials, fails, seed)
            reports[(name, float(eps))] = r
            wers.append(r.wer)
        g = tuple(float(e) for e in grid)
        estimates[name] = ThresholdEstimate(name, g, tuple(wers), {w: crossing(g, wers, w) for w in TARGET_WERS})
    gid = graphs[0].name or graph_hash(graphs[0])[:12]
    return ScanResult(gid, names, reports, estimates, violations)


def decode_with_help(G: TannerGraph, y: int, b: int, cap: int | None = None, verdicts: Verdicts | None = None) -> int | None:
    """Smallest helper ``z`` (by weight, then lexicographic) with LP success on ``y ^ z``."""
    cap = work_cap(HELP_CAP) if cap is None else cap
    total = sum(math.comb(G.n, w) for w in range(min(b, G.n) + 1))
    if total > cap:
        raise CapacityError("help-bit patterns", cap, total)
    V = verdicts or Verdicts(G)
    for w in range(min(b, G.n) + 1):
        for S in itertools.combinations(range(G.n), w):
            z = sum(1 << i for i in S)
            if V.success(y ^ z):
                return z
    return None


def help_wer(G: TannerGraph, epsilon, b: int, trials: int, seed: int) -> tuple[TrialReport, TrialReport]:
    """Plain and help-bit WER on the same trials."""
    V = Verdicts(G)
    plain = helped = 0
    for t in range(trials):
        y = word_below(trial_uniforms(G.n, seed, t), epsilon)
        ok = V.success(y)
        plain += not ok
        if not ok:
            helped += decode_with_help(G, y, b, verdicts=V) is None
    return _report(G, epsilon, trials, plain, seed), _report(G, epsilon, trials, helped, seed)


def high_density_exceptions(G: TannerGraph) -> list[int]:
    """Error words of weight ``>= n / d_min`` on which LP decoding succeeds (expected: none)."""
    if G.n > 16:
        raise CapacityError("exhaustive error patterns", 16, G.n)
    threshold = G.n / G.d_min
    V = Verdicts(G)
    return [y for y in range(1 << G.n) if popcount(y) >= threshold and V.success(y)]


@dataclass(frozen=True)
class LemmaReport:
    """One Monte-Carlo check of ``lhs >= rhs`` with a ``3 sigma`` allowance."""

    name: str
    epsilon: float
    epsilon_prime: float
    delta: float
    trials: int
    freq_a: float
    freq_b: float
    lhs: float
    rhs: float
    sigma: float

    @property
    def holds(self) -> bool:
        return self.lhs + 3 * self.sigma >= self.rhs

    def to_json(self) -> str:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["holds"] = self.holds
        return json.dumps(d)


def epsilon_prime(eps, delta) -> Fraction:
    eps, delta = to_prob(eps), to_prob(delta)
    return eps + (1 - eps) * delta


def _lemma_counts(G: TannerGraph, eps, delta, trials: int, seed: int, shift_sign: int, method: str) -> tuple[int, int]:
    """Counts of shifted-witness existence at one rate and plain LP success at the other.

    ``shift_sign = -1`` (excess): witness for ``(-1)^x - delta/2`` with ``x`` at
    ``eps``; plain success with ``y`` at ``eps'``.  ``shift_sign = +1``
    (deficiency): witness for ``(-1)^y + delta/2`` at ``eps'``; plain success at
    ``eps``.
    """
    eps, delta = to_prob(eps), to_prob(delta)
    ep = epsilon_prime(eps, delta)
    V = Verdicts(G, method)
    plain = Verdicts(G) if method != "lp" else V
    shift = shift_sign * delta / 2
    wit = ok = 0
    for t in range(trials):
        u = trial_uniforms(G.n, seed, t)
        x, y = word_below(u, eps), word_below(u, ep)
        if shift_sign < 0:
            wit += V.success(x, shift)
            ok += plain.success(y)
        else:
            wit += V.success(y, shift)
            ok += plain.success(x)
    return wit, ok


def excess_experiment(G: TannerGraph, epsilon, delta, trials: int, seed: int, method: str = "lp") -> LemmaReport:
    """Frequency of an excess witness at ``eps`` against ``1 - 2 q_{eps'} / delta``."""
    if not 0 < float(delta) < 1:
        raise ValueError("delta must lie in (0, 1)")
    wit, ok = _lemma_counts(G, epsilon, delta, trials, seed, -1, method)
    d = float(delta)
    fa, q = wit / trials, 1 - ok / trials
    sigma = math.hypot(binomial_sigma(fa, trials), 2 / d * binomial_sigma(q, trials))
    return LemmaReport("excess", float(epsilon), float(epsilon_prime(epsilon, delta)), d, trials, fa, q, fa, 1 - 2 * q / d, sigma)


def deficiency_experiment(G: TannerGraph, epsilon, delta, trials: int, seed: int, method: str = "lp") -> LemmaReport:
    """Plain failure rate at ``eps`` against ``2 q_{eps', delta} / delta``.

    Reported as ``lhs = 2 q / delta >= rhs = failure rate``.
    """
    if not 0 < float(delta) < 1:
        raise ValueError("delta must lie in (0, 1)")
    wit, ok = _lemma_counts(G, epsilon, delta, trials, seed, +1, method)
    d = float(delta)
    q, fail = 1 - wit / trials, 1 - ok / trials
    sigma = math.hypot(2 / d * binomial_sigma(q, trials), binomial_sigma(fail, trials))
    return LemmaReport("deficiency", float(epsilon), float(epsilon_prime(epsilon, delta)), d, trials, q, fail, 2 * q / d, fail, sigma)


def manifest(command: str, params: dict, seed: int, graphs: Sequence[TannerGraph] = ()) -> dict:
    return {
        "command": command,
        "params": params,
        "seed": seed,
        "version": __version__,
        "graphs": [{"name": G.name, "sha256": graph_hash(G)} for G in graphs],
    }
