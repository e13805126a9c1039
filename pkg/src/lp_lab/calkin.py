"""Rank thresholds of random row-regular matrices over GF(2).

The sum of ``t`` uniform weight-``d`` rows performs a random walk on the
weight ``0..n``.  Its transition matrix is diagonalised by Krawtchouk
polynomials, which gives a closed form for the probability that some large
set of rows sums to a light word.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from . import rng
from .errors import CapacityError, NumericError
from .gf2_tanner import NONDEGEN_CAP_BITS, is_nondegenerate, sample_check_regular
from .stats import wilson_interval

LN2 = math.log(2.0)


def binary_entropy(a: float) -> float:
    if a <= 0.0 or a >= 1.0:
        return 0.0
    return -a * math.log2(a) - (1 - a) * math.log2(1 - a)


def f_d(alpha: float, beta: float, d: int) -> float:
    """``-1 + H(alpha) + beta * log2(1 + (1 - 2 alpha)^d)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return -1.0 + binary_entropy(alpha) + beta * math.log2(1.0 + (1.0 - 2.0 * alpha) ** d)


def df_d(alpha: float, beta: float, d: int) -> float:
    """Partial derivative of ``f_d`` in ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    x = 1.0 - 2.0 * alpha
    return math.log2((1.0 - alpha) / alpha) - beta * 2.0 * d * x ** (d - 1) / ((1.0 + x**d) * LN2)


def beta_of_alpha(alpha: float, d: int) -> float:
    """The ``beta`` solving ``f_d(alpha, beta) = 0``."""
    return (1.0 - binary_entropy(alpha)) * LN2 / math.log1p((1.0 - 2.0 * alpha) ** d)


@dataclass(frozen=True)
class CalkinParams:
    d: int
    alpha_d: float
    beta_d: float
    tolerance: float


def beta_d(d: int, tol: float = 1e-10) -> CalkinParams:
    """Solve ``f_d = 0`` and ``d f_d / d alpha = 0`` on ``0 < alpha < 1/2``.

    ``beta`` is eliminated through ``f_d = 0``; the remaining equation in
    ``alpha`` is bracketed on a grid and solved with Brent's method.  Among
    the sign changes the one giving the smallest ``beta`` is kept.
    """
    if d < 3:
        raise ValueError("d must be at least 3")

    def g(a: float) -> float:
        return df_d(a, beta_of_alpha(a, d), d)

    grid = np.linspace(1e-6, 0.5 - 1e-4, 4001)
    vals = np.array([g(a) for a in grid])
    best = None
    for k in np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:])):
        a = brentq(g, grid[k], grid[k + 1], xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps)
        b = beta_of_alpha(a, d)
        if best is None or b < best[1]:
            best = (a, b)
    if best is None:
        raise NumericError(f"no sign change of the stationarity equation for d={d}")
    return CalkinParams(d, float(best[0]), float(best[1]), tol)


@dataclass(frozen=True)
class MarkovChain:
    n: int
    d: int
    A: np.ndarray  # A[p, q]: probability of weight q -> p; columns sum to 1


def transition_entry(n: int, d: int, p: int, q: int) -> Fraction:
    if (q + d - p) % 2:
        return Fraction(0)
    s = (q + d - p) // 2
    r = (d - q + p) // 2
    if s < 0 or r < 0 or s > q or r > n - q:
        return Fraction(0)
    return Fraction(math.comb(q, s) * math.comb(n - q, r), math.comb(n, d))


def transition_matrix(n: int, d: int, exact: bool = False) -> MarkovChain:
    """Weight walk driven by adding uniform weight-``d`` vectors."""
    if not 1 <= d <= n:
        raise ValueError("need 1 <= d <= n")
    E = [[transition_entry(n, d, p, q) for q in range(n + 1)] for p in range(n + 1)]
    if exact:
        A = np.array(E, dtype=object)
    else:
        A = np.array([[float(v) for v in row] for row in E])
    return MarkovChain(n, d, A)


def krawtchouk(n: int, j: int, i: int) -> int:
    """``sum_s (-1)^s C(i, s) C(n - i, j - s)``."""
    return sum((-1) ** s * math.comb(i, s) * math.comb(n - i, j - s) for s in range(0, min(i, j) + 1))


def eigenvalues_exact(n: int, d: int) -> list[Fraction]:
    c = math.comb(n, d)
    return [Fraction(krawtchouk(n, d, i), c) for i in range(n + 1)]


def eigen_krawtchouk(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues ``lambda_i`` and the matrix ``U`` whose column ``i`` is ``e_i``.

    ``U[j, i] = e_ij``; ``A = U diag(lambda) U^{-1}`` with ``U^{-1} = 2^{-n} U``.
    """
    if not 1 <= d <= n:
        raise ValueError("need 1 <= d <= n")
    lam = np.array([float(v) for v in eigenvalues_exact(n, d)])
    U = np.array([[float(krawtchouk(n, j, i)) for i in range(n + 1)] for j in range(n + 1)])
    return lam, U


def verify_decomposition(n: int, d: int) -> tuple[float, float]:
    """Max-norm residuals of ``A - U L (2^-n U)`` and ``U (2^-n U) - I``."""
    if n > 12:
        raise CapacityError("decomposition check size", 12, n)
    A = transition_matrix(n, d).A
    lam, U = eigen_krawtchouk(n, d)
    Uinv = U / 2.0**n
    r1 = np.abs(A - U @ np.diag(lam) @ Uinv).max()
    r2 = np.abs(U @ Uinv - np.eye(n + 1)).max()
    return float(r1), float(r2)


def weight_distribution(n: int, d: int, t: int) -> np.ndarray:
    """``a^{(t)}``: distribution of the weight of a sum of ``t`` random rows, via ``A^t``."""
    A = transition_matrix(n, d).A
    v = np.zeros(n + 1)
    v[0] = 1.0
    for _ in range(t):
        v = A @ v
    return v


def weight_distribution_spectral(n: int, d: int, t: int) -> np.ndarray:
    """Same distribution through ``2^{-n} sum_i e_ip lambda_i^t C(n, i)``."""
    lam, U = eigen_krawtchouk(n, d)
    return (U @ (lam**t * U[:, 0])) / 2.0**n


def union_bound(n: int, m: int, d: int, g: int, k: int) -> float:
    """``sum_{t=g}^m C(m, t) sum_{p<=k} a_p^{(t)}`` computed from powers of ``A``."""
    A = transition_matrix(n, d).A
    v = np.zeros(n + 1)
    v[0] = 1.0
    total = 0.0
    for t in range(1, m + 1):
        v = A @ v
        if t >= g:
            total += math.comb(m, t) * float(v[: k + 1].sum())
    return total


def _log_binom(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def nondegeneracy_bound(n: int, m: int, d: int, g: int, k: int) -> float:
    """``log2`` of ``2 (n+1)^k sum_{i<=n/2} 2^-n C(n,i) sum_{t=g}^m C(m,t) |lambda_i|^t``.

    Terms with ``lambda_i = 0`` contribute nothing (for ``g >= 1``).  The
    whole sum is taken in the natural-log domain.
    """
    if not 1 <= d <= n:
        raise ValueError("need 1 <= d <= n")
    if not 0 <= g <= m:
        raise ValueError("need 0 <= g <= m")
    lam = eigenvalues_exact(n, d)
    terms = []
    for i in range(n // 2 + 1):
        a = abs(lam[i])
        if a == 0:
            if g == 0:
                terms.append(-n * LN2 + _log_binom(n, i))
            continue
        la = math.log(a.numerator) - math.log(a.denominator)
        inner = [_log_binom(m, t) + t * la for t in range(g, m + 1)]
        terms.append(-n * LN2 + _log_binom(n, i) + float(logsumexp(inner)))
    if not terms:
        return -math.inf
    ln_total = LN2 + k * math.log(n + 1) + float(logsumexp(terms))
    return ln_total / LN2


def degeneracy_probability_exact(n: int, m: int, d: int, g: int, k: int, cap: int = 1_000_000) -> Fraction:
    """Exact probability that some ``>= g`` of ``m`` i.i.d. uniform weight-``d`` rows sum to weight ``<= k``.

    Row tuples are enumerated depth first.  The first row is fixed by
    coordinate symmetry, and a prefix that already contains a violating
    subset is counted for all of its completions at once.
    """
    if not 1 <= d <= n:
        raise ValueError("need 1 <= d <= n")
    rows = [int(sum(1 << i for i in c)) for c in itertools.combinations(range(n), d)]
    R = len(rows)
    if m == 0:
        return Fraction(0)
    if R ** (m - 1) > cap:
        raise CapacityError("exact degeneracy tuples", cap, R ** (m - 1))
    rows_u = np.array(rows, dtype=np.uint64)

    def bad_count(sums: np.ndarray, sizes: np.ndarray, depth: int) -> int:
        # sums/sizes cover every subset of the first ``depth`` rows
        if depth == m:
            return 0
        total = 0
        for r in rows_u:
            new_sums = sums ^ r
            new_sizes = sizes + 1
            if np.any((new_sizes >= g) & (_popcounts(new_sums) <= k)):
                total += R ** (m - depth - 1)
            else:
                total += bad_count(np.concatenate([sums, new_sums]), np.concatenate([sizes, new_sizes]), depth + 1)
        return total

    first = rows_u[:1]
    empty = np.zeros(1, dtype=np.uint64)
    sizes0 = np.zeros(1, dtype=np.int64)
    if np.any((sizes0 + 1 >= g) & (_popcounts(first) <= k)):
        return Fraction(1)
    sums = np.concatenate([empty, first])
    sizes = np.array([0, 1], dtype=np.int64)
    return Fraction(bad_count(sums, sizes, 1), R ** (m - 1))


def _popcounts(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).astype(np.int64)


@dataclass(frozen=True)
class DegeneracyEstimate:
    n: int
    m: int
    d: int
    s: int
    k: int
    trials: int
    violations: int
    freq: float
    ci_lo: float
    ci_hi: float
    log2_bound: float

    CSV_FIELDS = ("n", "m", "d", "s", "k", "trials", "violations", "freq", "ci_lo", "ci_hi", "log2_bound")


def empirical_degeneracy(n: int, m: int, d: int, s: int, k: int, trials: int, seed: int) -> DegeneracyEstimate:
    """Frequency with which a sampled matrix has ``>= s`` rows summing to weight ``<= k``.

    Trial ``t`` draws its matrix from the stream ``(seed, TRIAL, t)``; each
    matrix is checked exhaustively over all row subsets.
    """
    if m > NONDEGEN_CAP_BITS:
        raise CapacityError("nondegeneracy subsets", NONDEGEN_CAP_BITS, m, "2^m subsets per trial")
    bad = 0
    for t in range(trials):
        G = sample_check_regular(n, m, d, rng.child_seed(seed, rng.TRIAL, t))
        verdict = is_nondegenerate(G, s, k, subset_cap=NONDEGEN_CAP_BITS)
        if verdict.holds is False:
            bad += 1
    lo, hi = wilson_interval(bad, trials)
    bound = nondegeneracy_bound(n, m, d, s, k) if s <= m else -math.inf
    return DegeneracyEstimate(n, m, d, s, k, trials, bad, bad / trials, lo, hi, bound)


def degeneracy_csv(rows: list[DegeneracyEstimate]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=DegeneracyEstimate.CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: v for k, v in asdict(r).items() if k in DegeneracyEstimate.CSV_FIELDS})
    return buf.getvalue()
