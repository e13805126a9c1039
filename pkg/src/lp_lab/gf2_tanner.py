"""GF(2) linear algebra, Tanner graphs and their structural diagnostics.

Binary words are Python ``int`` bitsets: bit ``i`` is variable ``i``.  Rows
printed as bit strings list variable 0 first, so ``"1100"`` is ``0b0011``.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import rng
from .errors import CapacityError, ParseError, StructuralError, log2_cap, work_cap

INFINITE = math.inf

SPAN_CAP_BITS = 22
DELTA_CAP_BITS = 20
NONDEGEN_CAP_BITS = 24
EXPANSION_WORK_CAP = 10**7


# ---------------------------------------------------------------------------
# bit helpers


def popcount(x: int) -> int:
    return int(x).bit_count()


def bits_of(word: int) -> list[int]:
    """Indices of set bits, ascending."""
    out = []
    while word:
        low = word & -word
        out.append(low.bit_length() - 1)
        word ^= low
    return out


def word_from_bits(indices: Iterable[int]) -> int:
    w = 0
    for i in indices:
        w |= 1 << int(i)
    return w


def word_to_str(word: int, n: int) -> str:
    return "".join("1" if word >> i & 1 else "0" for i in range(n))


def word_from_str(s: str) -> int:
    s = s.strip()
    if any(ch not in "01" for ch in s):
        raise StructuralError(f"not a bit string: {s!r}")
    return sum(1 << i for i, ch in enumerate(s) if ch == "1")


def word_to_array(word: int, n: int) -> np.ndarray:
    return np.array([word >> i & 1 for i in range(n)], dtype=np.uint8)


def word_from_array(bits: Sequence[int]) -> int:
    return sum(1 << i for i, b in enumerate(bits) if int(b) & 1)


def _as_words(rows, n: int | None = None) -> tuple[list[int], int | None]:
    """Normalise rows (ints, bit strings or 0/1 sequences) to int words."""
    words: list[int] = []
    length = n
    for r in rows:
        if isinstance(r, (int, np.integer)):
            w = int(r)
            if w < 0:
                raise StructuralError("negative word")
            if n is not None and w >> n:
                raise StructuralError(f"word {w:#x} has bits beyond length {n}")
            words.append(w)
            continue
        if isinstance(r, str):
            r_len, w = len(r.strip()), word_from_str(r)
        else:
            seq = list(r)
            r_len, w = len(seq), word_from_array(seq)
        if length is None:
            length = r_len
        elif r_len != length:
            raise StructuralError(f"row length {r_len} differs from {length}")
        words.append(w)
    return words, length


# ---------------------------------------------------------------------------
# GF(2) elimination


def echelon_basis(words: Iterable[int]) -> list[int]:
    """Reduced basis of the span; each basis word has a distinct leading bit."""
    pivots: dict[int, int] = {}
    for w in words:
        while w:
            top = w.bit_length() - 1
            if top in pivots:
                w ^= pivots[top]
            else:
                pivots[top] = w
                break
    # back-substitute so each pivot bit appears in exactly one basis word
    order = sorted(pivots)
    for a in order:
        for b in order:
            if b != a and pivots[b] >> a & 1:
                pivots[b] ^= pivots[a]
    return [pivots[t] for t in sorted(pivots, reverse=True)]


def rank_gf2(rows, n: int | None = None) -> int:
    """GF(2) row rank.

    ``rows`` may hold int words, bit strings or 0/1 sequences; mixed-length
    sequences raise :class:`StructuralError`.
    """
    words, _ = _as_words(rows, n)
    return len(echelon_basis(words))


def nullspace_basis(words: Sequence[int], n: int) -> list[int]:
    """Basis of ``{x : <x, row> = 0 for every row}`` in F_2^n."""
    basis = echelon_basis(words)
    lead = {w.bit_length() - 1: w for w in basis}
    free = [c for c in range(n) if c not in lead]
    out = []
    for f in free:
        x = 1 << f
        for p, w in lead.items():
            if w >> f & 1:
                x |= 1 << p
        out.append(x)
    return out


def span_words(basis: Sequence[int]) -> list[int]:
    """All 2**len(basis) combinations, index bit t selects basis[t]."""
    out = [0]
    for b in basis:
        out += [x ^ b for x in out]
    return out


def _span_array(basis: Sequence[int]) -> np.ndarray:
    arr = np.zeros(1, dtype=np.uint64)
    for b in basis:
        arr = np.concatenate([arr, arr ^ np.uint64(b)])
    return arr


def _weights(arr: np.ndarray) -> np.ndarray:
    return np.bitwise_count(arr).astype(np.int64)


def _subset_sums(words: Sequence[int], n: int):
    """XOR and weight of every subset of ``words`` (subset index bit t -> word t)."""
    if n <= 64:
        sums = _span_array(words)
        return sums, _weights(sums)
    sums = span_words(words)
    return sums, np.array([popcount(s) for s in sums], dtype=np.int64)


# ---------------------------------------------------------------------------
# Tanner graphs


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite graph between ``n`` variables and an ordered list of checks.

    ``checks[j]`` is the biadjacency row of check ``j`` as an int word.
    Duplicate checks are allowed; empty checks are not.
    """

    n: int
    checks: tuple[int, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise StructuralError("a Tanner graph needs at least one variable")
        object.__setattr__(self, "checks", tuple(int(c) for c in self.checks))
        for j, c in enumerate(self.checks):
            if c <= 0:
                raise StructuralError(f"check {j} has degree 0")
            if c >> self.n:
                raise StructuralError(f"check {j} touches a variable >= n={self.n}")

    # constructors -----------------------------------------------------------
    @classmethod
    def from_lists(cls, n: int, check_lists: Iterable[Iterable[int]], name: str = "") -> TannerGraph:
        words = []
        for j, lst in enumerate(check_lists):
            lst = list(lst)
            if any(i < 0 or i >= n for i in lst):
                raise StructuralError(f"check {j} has a variable index outside [0, {n})")
            if len(set(lst)) != len(lst):
                raise StructuralError(f"check {j} lists a variable twice")
            words.append(word_from_bits(lst))
        return cls(n, tuple(words), name)

    @classmethod
    def from_strings(cls, rows: Sequence[str], name: str = "") -> TannerGraph:
        words, n = _as_words(rows)
        return cls(n, tuple(words), name)

    @classmethod
    def from_matrix(cls, H, name: str = "") -> TannerGraph:
        H = np.asarray(H, dtype=np.uint8) & 1
        return cls(H.shape[1], tuple(word_from_array(r) for r in H), name)

    # structure --------------------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.checks)

    @cached_property
    def check_neighbors(self) -> tuple[tuple[int, ...], ...]:
        """N(j): variables of each check, ascending."""
        return tuple(tuple(bits_of(c)) for c in self.checks)

    @cached_property
    def var_neighbors(self) -> tuple[tuple[int, ...], ...]:
        """N(i): checks containing each variable, ascending."""
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for j, vs in enumerate(self.check_neighbors):
            for i in vs:
                nb[i].append(j)
        return tuple(tuple(x) for x in nb)

    @cached_property
    def var_masks(self) -> tuple[int, ...]:
        """Check neighbourhood of each variable as a bitset over check indices."""
        return tuple(word_from_bits(js) for js in self.var_neighbors)

    @cached_property
    def check_degrees(self) -> tuple[int, ...]:
        return tuple(popcount(c) for c in self.checks)

    @property
    def var_degrees(self) -> tuple[int, ...]:
        return tuple(len(js) for js in self.var_neighbors)

    @property
    def d_max(self) -> int:
        return max(self.check_degrees, default=0)

    @property
    def d_min(self) -> int:
        return min(self.check_degrees, default=0)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Edges as (variable, check) pairs, ordered by check then variable."""
        return tuple((i, j) for j, vs in enumerate(self.check_neighbors) for i in vs)

    @cached_property
    def _index(self) -> dict[int, int]:
        idx: dict[int, int] = {}
        for j, c in enumerate(self.checks):
            idx.setdefault(c, j)
        return idx

    def index_of(self, word: int) -> int:
        """Index of the first check equal to ``word``; KeyError if absent."""
        return self._index[word]

    def has_check(self, word: int) -> bool:
        return word in self._index

    def matrix(self) -> np.ndarray:
        return np.array([word_to_array(c, self.n) for c in self.checks], dtype=np.uint8).reshape(self.m, self.n)

    def with_checks(self, extra: Iterable[int], name: str = "") -> TannerGraph:
        return TannerGraph(self.n, self.checks + tuple(extra), name or self.name)

    def subgraph(self, check_indices: Iterable[int]) -> TannerGraph:
        return TannerGraph(self.n, tuple(self.checks[j] for j in check_indices), self.name)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "checks": [list(v) for v in self.check_neighbors]})

    @classmethod
    def from_json(cls, text: str) -> TannerGraph:
        obj = json.loads(text)
        return cls.from_lists(int(obj["n"]), obj["checks"], obj.get("name", ""))

    def __repr__(self) -> str:
        rows = ",".join(word_to_str(c, self.n) for c in self.checks)
        return f"TannerGraph(n={self.n}, checks=[{rows}])"


# ---------------------------------------------------------------------------
# redundant checks


@dataclass(frozen=True)
class RedundantCheckSet:
    base: TannerGraph
    k: int
    dual_words: tuple[int, ...]

    def graph(self) -> TannerGraph:
        """Tanner graph whose checks are exactly these dual words.

        Base checks heavier than ``k`` are not included.
        """
        return TannerGraph(self.base.n, self.dual_words, f"{self.base.name}~{self.k}")


def _lex_key(n: int):
    return lambda w: word_to_str(w, n)


def enumerate_dual_low_weight(G: TannerGraph, k: int, budget: int | None = None) -> RedundantCheckSet:
    """All nonzero dual codewords of weight at most ``k``, sorted as bit strings.

    The span of the checks is enumerated exhaustively, so the rank of the
    check matrix must not exceed ``budget`` (default 22).
    """
    if k < 1:
        raise StructuralError("k must be >= 1")
    budget = log2_cap(SPAN_CAP_BITS) if budget is None else budget
    basis = echelon_basis(G.checks)
    if len(basis) > budget:
        raise CapacityError("dual-span", budget, len(basis), "rank of the check matrix")
    sums, weights = _subset_sums(basis, G.n)
    keep = (weights >= 1) & (weights <= k)
    words = [int(w) for w in (sums[keep] if isinstance(sums, np.ndarray) else np.array(sums, dtype=object)[keep])]
    words.sort(key=_lex_key(G.n))
    return RedundantCheckSet(G, k, tuple(words))


def augment(G: TannerGraph, k: int | None = None, budget: int | None = None) -> TannerGraph:
    """Graph with every redundant check of weight <= k (all of them when k is None)."""
    return enumerate_dual_low_weight(G, G.n if k is None else k, budget).graph()


# ---------------------------------------------------------------------------
# girth and cyclic subsets


def girth(G: TannerGraph) -> float:
    """Length of the shortest cycle of the bipartite graph; ``inf`` for a forest."""
    n, m = G.n, G.m
    adj: list[list[int]] = [[n + j for j in G.var_neighbors[i]] for i in range(n)]
    adj += [list(G.check_neighbors[j]) for j in range(m)]
    best = INFINITE
    for s in range(n + m):
        dist = {s: 0}
        parent = {s: -1}
        q = deque([s])
        while q:
            u = q.popleft()
            if 2 * dist[u] + 1 >= best:
                break
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    q.append(v)
                elif parent[u] != v:
                    best = min(best, dist[u] + dist[v] + 1)
    return best


def is_cyclic_subset(G: TannerGraph, S: Iterable[int]) -> bool:
    """Whether the subgraph induced on checks ``S`` and N(S) has a cycle.

    Leaves are stripped repeatedly; a nonempty remainder is a 2-core.
    """
    S = list(S)
    if len(S) < 2:
        return False
    var_deg: dict[int, int] = {}
    for j in S:
        for i in G.check_neighbors[j]:
            var_deg[i] = var_deg.get(i, 0) + 1
    check_deg = {j: G.check_degrees[j] for j in S}
    var_checks: dict[int, list[int]] = {i: [] for i in var_deg}
    for j in S:
        for i in G.check_neighbors[j]:
            var_checks[i].append(j)
    alive_v = set(var_deg)
    alive_c = set(S)
    queue = deque([("v", i) for i, d in var_deg.items() if d <= 1])
    queue.extend(("c", j) for j, d in check_deg.items() if d <= 1)
    while queue:
        kind, x = queue.popleft()
        if kind == "v":
            if x not in alive_v:
                continue
            alive_v.discard(x)
            for j in var_checks[x]:
                if j in alive_c:
                    check_deg[j] -= 1
                    if check_deg[j] <= 1:
                        queue.append(("c", j))
        else:
            if x not in alive_c:
                continue
            alive_c.discard(x)
            for i in G.check_neighbors[x]:
                if i in alive_v:
                    var_deg[i] -= 1
                    if var_deg[i] <= 1:
                        queue.append(("v", i))
    return bool(alive_c or alive_v)


@dataclass(frozen=True)
class Unknown:
    """Search was not exhaustive; ``upper_bound`` is the best value found."""

    upper_bound: float = INFINITE


def _subset_from_index(idx: int) -> list[int]:
    return bits_of(int(idx))


def delta_min_cyclic_sum(G: TannerGraph, subset_cap: int | None = None, size_bound: int | None = None):
    """Minimum weight of the XOR of a cyclic subset of checks.

    Exact when ``m <= subset_cap`` (default 20); ``inf`` when no subset is
    cyclic.  Larger graphs get ``Unknown(upper_bound)`` from subsets of at
    most ``size_bound`` checks.
    """
    subset_cap = log2_cap(DELTA_CAP_BITS) if subset_cap is None else subset_cap
    m = G.m
    if m <= subset_cap:
        sums, weights = _subset_sums(G.checks, G.n)
        order = np.argsort(weights, kind="stable")
        for idx in order:
            idx = int(idx)
            if idx & (idx - 1) == 0:  # empty or single check: never cyclic
                continue
            if is_cyclic_subset(G, _subset_from_index(idx)):
                return int(weights[idx])
        return INFINITE
    # partial search over small subsets
    budget = 1 << subset_cap
    if size_bound is None:
        size_bound, total = 1, m
        while size_bound < m and total + math.comb(m, size_bound + 1) <= budget:
            size_bound += 1
            total += math.comb(m, size_bound)
    best = INFINITE
    for size in range(2, size_bound + 1):
        for S in itertools.combinations(range(m), size):
            w = 0
            for j in S:
                w ^= G.checks[j]
            wt = popcount(w)
            if wt < best and is_cyclic_subset(G, S):
                best = wt
    return Unknown(best)


# ---------------------------------------------------------------------------
# nondegeneracy and expansion


@dataclass(frozen=True)
class Verdict:
    """Outcome of a property check.

    ``holds`` is True/False when decided and None when the search was not
    exhaustive.  ``witness`` is a violating index set when ``holds`` is False.
    """

    holds: bool | None
    witness: tuple[int, ...] | None = None
    note: str = ""

    @property
    def status(self) -> str:
        return {True: "certified", False: "violated", None: "unknown"}[self.holds]


def is_nondegenerate(
    G: TannerGraph,
    s: int,
    k: int,
    subset_cap: int | None = None,
    seed: int = 0,
    samples: int = 200_000,
) -> Verdict:
    """(s, k)-nondegeneracy: every sum of at least ``s`` rows has weight > k.

    Exhaustive for ``m <= subset_cap`` (default 24).  Otherwise random
    subsets are tried and the verdict is violated or unknown.
    """
    m = G.m
    if not 1 <= s <= m:
        raise StructuralError(f"need 1 <= s <= m, got s={s}, m={m}")
    subset_cap = log2_cap(NONDEGEN_CAP_BITS) if subset_cap is None else subset_cap
    if m <= subset_cap and G.n <= 64:
        lo_n = min(m, 12)
        lo_sums, lo_w = _subset_sums(G.checks[:lo_n], G.n)
        lo_size = _weights(np.arange(1 << lo_n, dtype=np.uint64))
        hi_words = G.checks[lo_n:]
        hi_sums = span_words(hi_words)
        for h, hs in enumerate(hi_sums):
            size = lo_size + popcount(h)
            wt = _weights(lo_sums ^ np.uint64(hs)) if hs else lo_w
            bad = np.flatnonzero((size >= s) & (wt <= k))
            if bad.size:
                idx = int(bad[0]) | (h << lo_n)
                return Verdict(False, tuple(_subset_from_index(idx)))
        return Verdict(True)
    if m <= subset_cap:
        for idx in range(1, 1 << m):
            if popcount(idx) >= s:
                w = 0
                for j in _subset_from_index(idx):
                    w ^= G.checks[j]
                if popcount(w) <= k:
                    return Verdict(False, tuple(_subset_from_index(idx)))
        return Verdict(True)
    gen = rng.stream(seed, rng.SEARCH)
    for _ in range(samples):
        size = int(gen.integers(s, m + 1))
        S = sorted(int(x) for x in gen.choice(m, size, replace=False))
        w = 0
        for j in S:
            w ^= G.checks[j]
        if popcount(w) <= k:
            return Verdict(False, tuple(S))
    return Verdict(None, note=f"m={m} above exhaustive cap; {samples} random subsets found no violation")


def check_expansion(
    G: TannerGraph,
    max_set: int,
    kappa,
    work: int | None = None,
    seed: int = 0,
    samples: int = 100_000,
) -> Verdict:
    """Is |N(S)| >= kappa |S| for every variable set of size <= max_set?"""
    if kappa <= 0:
        raise StructuralError("kappa must be positive")
    work = work_cap(EXPANSION_WORK_CAP) if work is None else work
    n = G.n
    max_set = min(max_set, n)
    masks = G.var_masks
    total = sum(math.comb(n, s) for s in range(1, max_set + 1))
    if total <= work:
        for size in range(1, max_set + 1):
            need = kappa * size
            for S in itertools.combinations(range(n), size):
                nb = 0
                for i in S:
                    nb |= masks[i]
                if popcount(nb) < need:
                    return Verdict(False, S)
        return Verdict(True)
    gen = rng.stream(seed, rng.SEARCH)
    for _ in range(samples):
        size = int(gen.integers(1, max_set + 1))
        S = tuple(sorted(int(x) for x in gen.choice(n, size, replace=False)))
        nb = 0
        for i in S:
            nb |= masks[i]
        if popcount(nb) < kappa * size:
            return Verdict(False, S)
    return Verdict(None, note=f"{total} sets above work cap {work}; {samples} random sets found no violation")


# ---------------------------------------------------------------------------
# random ensembles


def sample_check_regular(n: int, m: int, d: int, seed: int) -> TannerGraph:
    """m independent rows, each uniform over weight-d words of length n.

    Row ``r`` is drawn from stream ``(seed, ROW, r)``.
    """
    if not 1 <= d <= n:
        raise StructuralError(f"need 1 <= d <= n, got d={d}, n={n}")
    rows = []
    for r in range(m):
        g = rng.stream(seed, rng.ROW, r)
        rows.append(word_from_bits(int(x) for x in g.choice(n, d, replace=False)))
    return TannerGraph(n, tuple(rows), f"creg-{n}-{m}-{d}-{seed}")


def sample_variable_regular(n: int, m: int, d_v: int, seed: int, max_tries: int = 1000) -> TannerGraph:
    """Configuration model with every variable of degree ``d_v``.

    Check degrees are ``n*d_v/m``; matchings that put a variable twice on
    one check are redrawn.
    """
    if m < 1 or d_v < 1 or (n * d_v) % m:
        raise StructuralError(f"n*d_v={n * d_v} is not divisible by m={m}")
    d_c = n * d_v // m
    if d_v > m or d_c > n:
        raise StructuralError("degree sequence is not realisable without parallel edges")
    g = rng.stream(seed, rng.MATCHING)
    stubs = np.repeat(np.arange(n), d_v)
    for _ in range(max_tries):
        perm = g.permutation(stubs)
        groups = perm.reshape(m, d_c)
        if all(len(set(row.tolist())) == d_c for row in groups):
            return TannerGraph(n, tuple(word_from_bits(row.tolist()) for row in groups), f"vreg-{n}-{m}-{d_v}-{seed}")
    raise StructuralError(f"no simple matching found in {max_tries} tries")


# ---------------------------------------------------------------------------
# alist I/O


def emit_alist(G: TannerGraph) -> str:
    """MacKay alist text, 1-based indices, zero padded, LF endings."""
    vdeg, cdeg = G.var_degrees, G.check_degrees
    dv, dc = max(vdeg, default=0), max(cdeg, default=0)
    lines = [f"{G.n} {G.m}", f"{dv} {dc}", " ".join(map(str, vdeg)), " ".join(map(str, cdeg))]
    for js in G.var_neighbors:
        lines.append(" ".join(str(j + 1) for j in js) + " 0" * (dv - len(js)))
    for vs in G.check_neighbors:
        lines.append(" ".join(str(i + 1) for i in vs) + " 0" * (dc - len(vs)))
    return "\n".join(line.strip() for line in lines) + "\n"


def parse_alist(text: str) -> TannerGraph:
    """Parse MacKay alist text; errors carry the offending line number."""
    raw = text.replace("\r\n", "\n").split("\n")
    lines = [(k + 1, ln.split()) for k, ln in enumerate(raw) if ln.strip()]
    pos = 0

    def take(expected: int | None = None):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(len(raw), "unexpected end of file")
        ln_no, toks = lines[pos]
        pos += 1
        try:
            vals = [int(t) for t in toks]
        except ValueError:
            raise ParseError(ln_no, "non-integer token") from None
        if expected is not None and len(vals) != expected:
            raise ParseError(ln_no, f"expected {expected} values, found {len(vals)}")
        return ln_no, vals

    ln, (n, m) = take(2)
    if n < 1 or m < 0:
        raise ParseError(ln, "bad dimensions")
    ln, (dv, dc) = take(2)
    ln_vd, vdeg = take(n)
    ln_cd, cdeg = take(m) if m else (ln, [])
    if any(d > dv or d < 0 for d in vdeg):
        raise ParseError(ln_vd, "variable degree exceeds declared maximum")
    if any(d > dc or d < 1 for d in cdeg):
        raise ParseError(ln_cd, "check degree outside [1, max]")
    col_sets = []
    for i in range(n):
        ln, vals = take()
        nz = [v for v in vals if v != 0]
        if len(nz) != vdeg[i]:
            raise ParseError(ln, f"variable {i + 1} lists {len(nz)} checks, degree says {vdeg[i]}")
        if any(v < 1 or v > m for v in nz):
            raise ParseError(ln, f"check index out of range 1..{m}")
        col_sets.append(set(nz))
    rows = []
    for j in range(m):
        ln, vals = take()
        nz = [v for v in vals if v != 0]
        if len(nz) != cdeg[j]:
            raise ParseError(ln, f"check {j + 1} lists {len(nz)} variables, degree says {cdeg[j]}")
        if any(v < 1 or v > n for v in nz):
            raise ParseError(ln, f"variable index out of range 1..{n}")
        if len(set(nz)) != len(nz):
            raise ParseError(ln, "repeated variable index")
        for v in nz:
            if j + 1 not in col_sets[v - 1]:
                raise ParseError(ln, f"edge ({v}, {j + 1}) missing from the variable lists")
        rows.append(word_from_bits(v - 1 for v in nz))
    if sum(vdeg) != sum(cdeg):
        raise ParseError(ln_cd, "degree sums disagree")
    return TannerGraph(n, tuple(rows))


def load_graph(path: str) -> TannerGraph:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return TannerGraph.from_json(text)
    return parse_alist(text)
