"""LP decoding over the fundamental polytope, in exact rational arithmetic.

The fundamental polytope of a Tanner graph is the intersection of the convex
hulls of the single-check local codes.  Each local hull is described by the
box ``0 <= x <= 1`` and the odd-subset cuts

    sum_{i in S} x_i - sum_{i in N(j) \\ S} x_i <= |S| - 1,   |S| odd.

Decoding assumes the all-zeros codeword was sent: the decoder succeeds iff
``x = 0`` is the unique minimiser of ``<x, gamma>`` over the polytope.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import CapacityError, StructuralError
from .gf2_tanner import (
    TannerGraph,
    _span_array,
    nullspace_basis,
    word_to_array,
)
from .simplex import integer_row, solve_canonical, to_fraction

MAX_CUT_DEGREE = 14
VERTEX_MAX_DIM = 14
VERTEX_MAX_ROWS = 200
ML_MAX_N = 24

SUCCESS = "success"
FAILURE = "failure"


def frac_str(v) -> str:
    v = to_fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True)
class Polytope:
    """Inequality description ``a.x <= b``.  Box rows always come first."""

    n: int
    inequalities: tuple[tuple[tuple, object], ...]

    def __post_init__(self):
        for a, _ in self.inequalities:
            if len(a) != self.n:
                raise StructuralError("inequality length differs from dimension")

    def __len__(self) -> int:
        return len(self.inequalities)

    def contains(self, x: Sequence) -> bool:
        x = [to_fraction(v) for v in x]
        return all(
            sum(to_fraction(ai) * xi for ai, xi in zip(a, x) if ai) <= to_fraction(b)
            for a, b in self.inequalities
        )

    def to_json(self) -> str:
        rows = [{"a": [frac_str(v) for v in a], "b": frac_str(b)} for a, b in self.inequalities]
        return json.dumps({"n": self.n, "inequalities": rows})

    @classmethod
    def from_json(cls, text: str) -> Polytope:
        d = json.loads(text)
        ineq = tuple(
            (tuple(Fraction(v) for v in r["a"]), Fraction(r["b"])) for r in d["inequalities"]
        )
        return cls(int(d["n"]), ineq)


@dataclass(frozen=True, order=True)
class Pseudocodeword:
    coords: tuple[Fraction, ...]

    @property
    def n(self) -> int:
        return len(self.coords)

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coords)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def total(self) -> Fraction:
        return sum(self.coords, Fraction(0))

    def to_word(self) -> int:
        if not self.is_integral():
            raise StructuralError("fractional pseudocodeword has no word form")
        return sum(1 << i for i, c in enumerate(self.coords) if c)

    def __str__(self) -> str:
        return "(" + ", ".join(frac_str(c) for c in self.coords) + ")"


def box_rows(n: int) -> list[tuple[tuple[int, ...], int]]:
    rows = []
    for i in range(n):
        e = [0] * n
        e[i] = -1
        rows.append((tuple(e), 0))
        e = [0] * n
        e[i] = 1
        rows.append((tuple(e), 1))
    return rows


def check_cuts(n: int, nbrs: Sequence[int]) -> list[tuple[tuple[int, ...], int]]:
    """Odd-subset cuts of one check, subsets in binary order over ``nbrs``."""
    d = len(nbrs)
    rows = []
    for mask in range(1, 1 << d):
        size = bin(mask).count("1")
        if size % 2 == 0:
            continue
        a = [0] * n
        for t, i in enumerate(nbrs):
            a[i] = 1 if mask >> t & 1 else -1
        rows.append((tuple(a), size - 1))
    return rows


@lru_cache(maxsize=256)
def build_fundamental_polytope(G: TannerGraph, max_degree: int = MAX_CUT_DEGREE) -> Polytope:
    if G.d_max > max_degree:
        raise CapacityError("check degree", max_degree, G.d_max, "odd-subset cuts grow as 2^(d-1)")
    rows = box_rows(G.n)
    for nbrs in G.check_neighbors:
        rows.extend(check_cuts(G.n, nbrs))
    return Polytope(G.n, tuple(rows))


@lru_cache(maxsize=256)
def _canonical_system(P: Polytope) -> tuple[tuple[tuple[int, ...], ...], tuple[int, ...]]:
    """Integer rows of ``P`` minus the nonnegativity rows (implicit in the simplex)."""
    A, b = [], []
    for a, rhs in P.inequalities:
        nz = [(k, v) for k, v in enumerate(a) if v]
        if len(nz) == 1 and nz[0][1] < 0 and to_fraction(rhs) == 0:
            continue
        ai, bi, _ = integer_row(a, rhs)
        A.append(tuple(ai))
        b.append(bi)
    return tuple(A), tuple(b)


def simplex_solve(P: Polytope, c: Sequence, sense: str = "min") -> tuple[Fraction, tuple[Fraction, ...]]:
    """Optimise ``<x, c>`` over ``P``; returns the exact value and an optimal vertex."""
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    A, b = _canonical_system(P)
    ci, _, scale = integer_row(c)
    sign = -1 if sense == "min" else 1
    res = solve_canonical([sign * v for v in ci], A, b)
    if not res.optimal:
        raise StructuralError(f"LP over polytope is {res.status}")
    return sign * res.value / scale, res.x


def normalize_llr(gamma: Sequence) -> tuple[Fraction, ...]:
    return tuple(to_fraction(g) for g in gamma)


def channel_llr(y: int | Sequence[int], n: int | None = None) -> tuple[Fraction, ...]:
    """BSC LLR normalised to ``(-1)^y``; ``y`` is a word or a 0/1 sequence."""
    if isinstance(y, (int, np.integer)):
        if n is None:
            raise ValueError("n is required when y is a word")
        bits = [(int(y) >> i) & 1 for i in range(n)]
    else:
        bits = [int(v) for v in y]
    return tuple(Fraction(-1 if b else 1) for b in bits)


@dataclass(frozen=True)
class DecodeResult:
    status: str
    value: Fraction
    case: str | None = None
    certificate: tuple[Fraction, ...] | None = None

    @property
    def success(self) -> bool:
        return self.status == SUCCESS

    def to_json(self) -> str:
        d = {"status": self.status, "value": frac_str(self.value)}
        if self.certificate is not None:
            d["case"] = self.case
            d["certificate"] = [frac_str(v) for v in self.certificate]
        return json.dumps(d)


def lp_decode(G: TannerGraph, gamma: Sequence, polytope: Polytope | None = None) -> DecodeResult:
    """Exact LP decoder.

    Stage one minimises ``<x, gamma>``; a negative optimum is a failure of
    case ``"negative"``.  If the optimum is zero, stage two maximises
    ``sum(x)`` over the optimal face ``{x in P : <x, gamma> <= 0}``; a positive
    optimum means zero is not the unique minimiser (case ``"tie"``).
    """
    gamma = normalize_llr(gamma)
    if len(gamma) != G.n:
        raise StructuralError(f"LLR length {len(gamma)} != n = {G.n}")
    P = polytope if polytope is not None else build_fundamental_polytope(G)
    A, b = _canonical_system(P)
    gi, _, _ = integer_row(gamma)
    res = solve_canonical([-v for v in gi], A, b)
    value = -res.value / math.lcm(*(g.denominator for g in gamma))
    if value < 0:
        return DecodeResult(FAILURE, value, "negative", res.x)
    res2 = solve_canonical([1] * G.n, A + (tuple(gi),), b + (0,))
    if res2.value > 0:
        return DecodeResult(FAILURE, value, "tie", res2.x)
    return DecodeResult(SUCCESS, value)


@dataclass(frozen=True)
class MLResult:
    value: Fraction
    minimizers: tuple[int, ...]

    @property
    def unique(self) -> bool:
        return len(self.minimizers) == 1

    @property
    def unique_zero(self) -> bool:
        return self.minimizers == (0,)


def codewords(G: TannerGraph, max_n: int = ML_MAX_N) -> np.ndarray:
    """All codewords as a uint64 array of words (bit i = variable i)."""
    if G.n > max_n:
        raise CapacityError("ML block length", max_n, G.n)
    basis = nullspace_basis(G.checks, G.n)
    return _span_array(basis)


def ml_decode(G: TannerGraph, gamma: Sequence) -> MLResult:
    """Brute-force ML over the code: every minimiser of ``<x, gamma>``."""
    gamma = normalize_llr(gamma)
    if len(gamma) != G.n:
        raise StructuralError(f"LLR length {len(gamma)} != n = {G.n}")
    words = codewords(G)
    gi, _, scale = integer_row(gamma)
    bits = ((words[:, None] >> np.arange(G.n, dtype=np.uint64)) & np.uint64(1)).astype(np.int64)
    cost = bits @ np.asarray(gi, dtype=np.int64)
    best = cost.min()
    mins = sorted(int(w) for w in words[cost == best])
    return MLResult(Fraction(int(best), scale), tuple(mins))


def _vertices_cdd(P: Polytope) -> list[tuple[Fraction, ...]]:
    import cdd

    rows = []
    for a, b in P.inequalities:
        rows.append([to_fraction(b)] + [-to_fraction(v) for v in a])
    mat = cdd.Matrix(rows, number_type="fraction")
    mat.rep_type = cdd.RepType.INEQUALITY
    gen = cdd.Polyhedron(mat).get_generators()
    out = []
    for r in range(gen.row_size):
        row = gen[r]
        if row[0] != 1:
            raise StructuralError("polytope is unbounded")
        out.append(tuple(Fraction(v) for v in row[1:]))
    return out


def _solve_square(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> tuple[Fraction, ...] | None:
    n = len(rows)
    M = [list(r) + [v] for r, v in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return tuple(M[r][n] for r in range(n))


def _vertices_subsets(P: Polytope) -> list[tuple[Fraction, ...]]:
    """Literal basic-solution enumeration over all n-subsets of rows."""
    A = [tuple(to_fraction(v) for v in a) for a, _ in P.inequalities]
    b = [to_fraction(v) for _, v in P.inequalities]
    found = set()
    for idx in itertools.combinations(range(len(A)), P.n):
        x = _solve_square([A[k] for k in idx], [b[k] for k in idx])
        if x is not None and all(sum(ai * xi for ai, xi in zip(a, x)) <= bb for a, bb in zip(A, b)):
            found.add(x)
    return list(found)


def enumerate_vertices(P: Polytope, method: str = "cdd") -> list[Pseudocodeword]:
    """Every vertex of ``P``, sorted lexicographically.

    ``method="cdd"`` uses exact double description; ``"subsets"`` solves
    every square subsystem and is meant only for tiny oracle checks.
    """
    if P.n > VERTEX_MAX_DIM:
        raise CapacityError("vertex enumeration dimension", VERTEX_MAX_DIM, P.n)
    if len(P) > VERTEX_MAX_ROWS:
        raise CapacityError("vertex enumeration inequalities", VERTEX_MAX_ROWS, len(P))
    if method == "cdd":
        pts = _vertices_cdd(P)
    elif method == "subsets":
        pts = _vertices_subsets(P)
    else:
        raise ValueError(f"unknown method {method!r}")
    return sorted({Pseudocodeword(tuple(Fraction(v) for v in p)) for p in pts})


def codeword_points(G: TannerGraph) -> list[Pseudocodeword]:
    pts = []
    for w in codewords(G):
        pts.append(Pseudocodeword(tuple(Fraction(int(v)) for v in word_to_array(int(w), G.n))))
    return sorted(pts)


def _nonzero(vertices: Sequence[Pseudocodeword]) -> list[tuple[Fraction, ...]]:
    out = []
    for v in vertices:
        c = v.coords if isinstance(v, Pseudocodeword) else tuple(to_fraction(x) for x in v)
        if any(c):
            out.append(c)
    return out


def bsc_pseudoweight(vertices: Sequence) -> Fraction | float:
    """``2 a*``: a* is the largest a with top-a sum < half the total on every nonzero vertex."""
    nz = _nonzero(vertices)
    if not nz:
        return math.inf
    a_star = None
    for c in nz:
        half = sum(c) / 2
        top = sorted(c, reverse=True)
        acc, a = Fraction(0), 0
        while a < len(top) and acc + top[a] < half:
            acc += top[a]
            a += 1
        a_star = a if a_star is None else min(a_star, a)
    return Fraction(2 * a_star)


def strength_ratio(vertices: Sequence, alpha_count: int) -> Fraction:
    """Largest share of the total mass carried by the top ``alpha_count`` coordinates."""
    if alpha_count < 1:
        raise ValueError("alpha_count must be >= 1")
    best = Fraction(0)
    for c in _nonzero(vertices):
        top = sorted(c, reverse=True)[:alpha_count]
        best = max(best, sum(top) / sum(c))
    return best


def vertices_to_json(vertices: Sequence[Pseudocodeword]) -> str:
    return json.dumps([[frac_str(v) for v in p.coords] for p in vertices])


def pseudocodeword_from_word(word: int, n: int) -> Pseudocodeword:
    return Pseudocodeword(tuple(Fraction(1 if word >> i & 1 else 0) for i in range(n)))


__all__ = [
    "Polytope",
    "Pseudocodeword",
    "DecodeResult",
    "MLResult",
    "build_fundamental_polytope",
    "simplex_solve",
    "lp_decode",
    "ml_decode",
    "enumerate_vertices",
    "bsc_pseudoweight",
    "strength_ratio",
    "channel_llr",
    "codewords",
    "codeword_points",
]
