"""Dual witnesses, hyperflows and the constructions built on them.

A weighting ``w`` assigns a rational to each edge ``(i, j)`` (variable ``i``,
check ``j``).  It is a dual witness for an LLR vector ``gamma`` when

* ``F_i(w) = sum_j w(i, j) < gamma_i`` for every variable, and
* ``w(i, j) + w(i', j) >= 0`` for every check and every pair in it.

A hyperflow gives each active check one sink edge of weight ``-P_j`` and
``+P_j`` on every other edge.  Hyperflows are stored as a
:class:`SinkAssignment` ``{check: (sink, P)}``; the generic form is
:class:`EdgeWeighting`.
"""

from __future__ import annotations

import graphlib
import itertools
import json
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapacityError, InvariantError, StructuralError, work_cap
from .gf2_tanner import TannerGraph, bits_of
from .lp_core import frac_str
from .simplex import OPTIMAL, linprog, solve_canonical, to_fraction

log = logging.getLogger(__name__)

HYPERFLOW_CAP = 10**6


# ---------------------------------------------------------------- LLR helpers


def _bits(y, n: int | None) -> list[int]:
    if isinstance(y, int):
        if n is None:
            raise ValueError("n is required when y is a word")
        return [(y >> i) & 1 for i in range(n)]
    return [int(v) for v in y]


def shifted_llr(y, shift, n: int | None = None) -> tuple[Fraction, ...]:
    """``(-1)^y + shift``; a negative shift asks for excess, a positive one allows deficiency."""
    shift = to_fraction(shift)
    return tuple(Fraction(-1 if b else 1) + shift for b in _bits(y, n))


def asymmetric_llr(y, beta, n: int | None = None) -> tuple[Fraction, ...]:
    """``-1`` on the support of ``y`` and ``beta`` elsewhere."""
    beta = to_fraction(beta)
    if beta <= 0:
        raise ValueError("beta must be positive")
    return tuple(Fraction(-1) if b else beta for b in _bits(y, n))


def indicator(U: Iterable[int], n: int) -> int:
    word = 0
    for i in U:
        if not 0 <= i < n:
            raise StructuralError(f"variable {i} out of range")
        word |= 1 << i
    return word


def _gamma(G: TannerGraph, gamma) -> tuple[Fraction, ...]:
    g = tuple(to_fraction(v) for v in gamma)
    if len(g) != G.n:
        raise StructuralError(f"LLR length {len(g)} != n = {G.n}")
    return g


def default_box(gamma: Sequence[Fraction]) -> int:
    """The classical box ``sum |gamma| + 1``; too small in general, see ``find_dual_witness``."""
    return math.ceil(sum(abs(g) for g in gamma)) + 1


# ------------------------------------------------------------- weightings


class EdgeWeighting:
    """Rational edge weights; absent edges weigh zero."""

    def __init__(self, graph: TannerGraph, w: dict | None = None, slack: Fraction | None = None):
        clean: dict[tuple[int, int], Fraction] = {}
        for (i, j), v in (w or {}).items():
            v = to_fraction(v)
            if not v:
                continue
            if not (0 <= j < graph.m and graph.checks[j] >> i & 1):
                raise StructuralError(f"edge ({i}, {j}) is not in the graph")
            clean[(int(i), int(j))] = v
        self.graph = graph
        self.w = clean
        self.slack = slack

    def get(self, i: int, j: int) -> Fraction:
        return self.w.get((i, j), Fraction(0))

    def flows(self) -> list[Fraction]:
        F = [Fraction(0)] * self.graph.n
        for (i, _), v in self.w.items():
            F[i] += v
        return F

    def flow(self, i: int) -> Fraction:
        return sum((v for (a, _), v in self.w.items() if a == i), Fraction(0))

    def active_checks(self) -> set[int]:
        return {j for _, j in self.w}

    def scaled(self, c) -> EdgeWeighting:
        c = to_fraction(c)
        return EdgeWeighting(self.graph, {e: v * c for e, v in self.w.items()})

    def embed(self, target: TannerGraph) -> EdgeWeighting:
        """Re-index onto ``target``, matching checks by their word."""
        out = {}
        for (i, j), v in self.w.items():
            jj = target.index_of(self.graph.checks[j])
            out[(i, jj)] = out.get((i, jj), Fraction(0)) + v
        return EdgeWeighting(target, out)

    def wdg(self) -> WDG:
        return WDG.of(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, EdgeWeighting) and self.graph == other.graph and self.w == other.w

    def __repr__(self) -> str:
        items = ", ".join(f"({i},{j}):{frac_str(v)}" for (i, j), v in sorted(self.w.items()))
        return f"EdgeWeighting({{{items}}})"

    def to_json(self, gamma: Sequence | None = None) -> str:
        d = {"edges": [[i, j, frac_str(v)] for (i, j), v in sorted(self.w.items())]}
        if gamma is not None:
            d["gamma"] = [frac_str(g) for g in gamma]
        return json.dumps(d)

    @classmethod
    def from_json(cls, graph: TannerGraph, text: str) -> EdgeWeighting:
        d = json.loads(text)
        return cls(graph, {(int(i), int(j)): Fraction(v) for i, j, v in d["edges"]})


@dataclass(frozen=True)
class WDG:
    """Directed view: ``w > 0`` points variable to check, ``w < 0`` check to variable."""

    weighting: EdgeWeighting
    out_flow: tuple[Fraction, ...]
    in_flow: tuple[Fraction, ...]
    out_checks: tuple[tuple[int, ...], ...]
    in_checks: tuple[tuple[int, ...], ...]

    @classmethod
    def of(cls, w: EdgeWeighting) -> WDG:
        n = w.graph.n
        out_f = [Fraction(0)] * n
        in_f = [Fraction(0)] * n
        out_c: list[list[int]] = [[] for _ in range(n)]
        in_c: list[list[int]] = [[] for _ in range(n)]
        for (i, j), v in sorted(w.w.items()):
            if v > 0:
                out_f[i] += v
                out_c[i].append(j)
            else:
                in_f[i] -= v
                in_c[i].append(j)
        D = cls(w, tuple(out_f), tuple(in_f), tuple(map(tuple, out_c)), tuple(map(tuple, in_c)))
        F = w.flows()
        for i in range(n):
            if F[i] != out_f[i] - in_f[i]:
                raise InvariantError(f"flow bookkeeping broken at variable {i}")
        return D

    def arcs(self) -> list[tuple[tuple[str, int], tuple[str, int], Fraction]]:
        out = []
        for (i, j), v in sorted(self.weighting.w.items()):
            if v > 0:
                out.append((("v", i), ("c", j), v))
            else:
                out.append((("c", j), ("v", i), -v))
        return out

    def is_acyclic(self) -> bool:
        preds: dict[tuple[str, int], set] = {}
        for src, dst, _ in self.arcs():
            preds.setdefault(dst, set()).add(src)
            preds.setdefault(src, set())
        try:
            graphlib.TopologicalSorter(preds).prepare()
        except graphlib.CycleError:
            return False
        return True


class SinkAssignment:
    """Hyperflow in compact form: ``flows[j] = (sink, P_j)`` with ``P_j > 0``."""

    def __init__(self, graph: TannerGraph, flows: dict[int, tuple[int, object]] | None = None):
        clean: dict[int, tuple[int, Fraction]] = {}
        for j, (s, P) in (flows or {}).items():
            P = to_fraction(P)
            if P < 0:
                raise StructuralError(f"check {j} has negative magnitude")
            if not graph.checks[j] >> s & 1:
                raise StructuralError(f"sink {s} is not in check {j}")
            if P:
                clean[int(j)] = (int(s), P)
        self.graph = graph
        self.flows = clean

    def copy(self) -> SinkAssignment:
        return SinkAssignment(self.graph, dict(self.flows))

    def weighting(self) -> EdgeWeighting:
        w = {}
        for j, (s, P) in self.flows.items():
            for i in self.graph.check_neighbors[j]:
                w[(i, j)] = -P if i == s else P
        return EdgeWeighting(self.graph, w)

    def in_checks(self, i: int) -> list[int]:
        return sorted(j for j, (s, _) in self.flows.items() if s == i)

    def out_checks(self, i: int) -> list[int]:
        return sorted(j for j, (s, _) in self.flows.items() if s != i and self.graph.checks[j] >> i & 1)

    def in_flow(self, i: int) -> Fraction:
        return sum((P for j, (s, P) in self.flows.items() if s == i), Fraction(0))

    def out_flow(self, i: int) -> Fraction:
        return sum(
            (P for j, (s, P) in self.flows.items() if s != i and self.graph.checks[j] >> i & 1),
            Fraction(0),
        )

    def is_acyclic(self) -> bool:
        preds: dict[int, set[int]] = {i: set() for i in range(self.graph.n)}
        for j, (s, _) in self.flows.items():
            for i in self.graph.check_neighbors[j]:
                if i != s:
                    preds[s].add(i)
        try:
            graphlib.TopologicalSorter(preds).prepare()
        except graphlib.CycleError:
            return False
        return True

    @classmethod
    def from_weighting(cls, w: EdgeWeighting) -> SinkAssignment:
        bad = hyperflow_pattern_violations(w)
        if bad:
            raise StructuralError(f"not a hyperflow at checks {bad}")
        flows = {}
        for j in sorted(w.active_checks()):
            nbrs = w.graph.check_neighbors[j]
            neg = [i for i in nbrs if w.get(i, j) < 0]
            flows[j] = (neg[0], -w.get(neg[0], j))
        return cls(w.graph, flows)

    def __eq__(self, other) -> bool:
        return isinstance(other, SinkAssignment) and self.graph == other.graph and self.flows == other.flows

    def __repr__(self) -> str:
        items = ", ".join(f"{j}->{s}:{frac_str(P)}" for j, (s, P) in sorted(self.flows.items()))
        return f"SinkAssignment({{{items}}})"

    def to_json(self) -> str:
        return json.dumps({"flows": [[j, s, frac_str(P)] for j, (s, P) in sorted(self.flows.items())]})


def _as_weighting(w) -> EdgeWeighting:
    return w.weighting() if isinstance(w, SinkAssignment) else w


# ----------------------------------------------------------- verification


@dataclass
class WitnessReport:
    valid: bool
    violations: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


def pair_violations(w: EdgeWeighting) -> list[tuple]:
    G = w.graph
    bad = []
    for j, nbrs in enumerate(G.check_neighbors):
        vals = [(w.get(i, j), i) for i in nbrs]
        if len(vals) < 2 or sorted(vals)[0][0] + sorted(vals)[1][0] >= 0:
            continue
        for (a, i), (b, i2) in itertools.combinations(vals, 2):
            if a + b < 0:
                bad.append(("check", j, i, i2, a + b))
    return bad


def verify_dual_witness(G: TannerGraph, gamma, w) -> WitnessReport:
    """Exact check of both inequality families; every violation is reported."""
    w = _as_weighting(w)
    if w.graph != G:
        raise StructuralError("weighting belongs to a different graph")
    gamma = _gamma(G, gamma)
    bad = [("variable", i, F, gamma[i]) for i, F in enumerate(w.flows()) if not F < gamma[i]]
    bad.extend(pair_violations(w))
    return WitnessReport(not bad, bad)


def hyperflow_pattern_violations(w: EdgeWeighting) -> list[int]:
    """Checks whose edges are not ``-P`` on one edge and ``+P`` on the rest."""
    G = w.graph
    bad = []
    for j in sorted(w.active_checks()):
        vals = [w.get(i, j) for i in G.check_neighbors[j]]
        neg = [v for v in vals if v < 0]
        if len(neg) != 1:
            bad.append(j)
            continue
        P = -neg[0]
        if sorted(vals) != sorted([-P] + [P] * (len(vals) - 1)):
            bad.append(j)
    return bad


def verify_hyperflow(G: TannerGraph, gamma, w) -> bool:
    w = _as_weighting(w)
    return not hyperflow_pattern_violations(w) and verify_dual_witness(G, gamma, w).valid


def is_primitive(G: TannerGraph, gamma, w) -> bool:
    """Hyperflow where ``gamma_i <= 0`` variables have no outflow and the rest no inflow."""
    w = _as_weighting(w)
    if not verify_hyperflow(G, gamma, w):
        return False
    gamma = _gamma(G, gamma)
    D = w.wdg()
    for i in range(G.n):
        if gamma[i] <= 0 and D.out_flow[i] != 0:
            return False
        if gamma[i] > 0 and D.in_flow[i] != 0:
            return False
    if not D.is_acyclic():
        raise InvariantError("primitive hyperflow with a directed cycle")
    return True


def verify_weak_dual_witness(G: TannerGraph, y, w, b: int) -> bool:
    """``F_i < 1`` everywhere and ``F_i < -1`` on all but at most ``b`` error positions."""
    w = _as_weighting(w)
    if w.graph != G:
        raise StructuralError("weighting belongs to a different graph")
    if pair_violations(w):
        return False
    bits = _bits(y, G.n)
    F = w.flows()
    if any(not f < 1 for f in F):
        return False
    misses = sum(1 for i in range(G.n) if bits[i] and not F[i] < -1)
    return misses <= b


# ------------------------------------------------------------------ search


def _witness_lp(G: TannerGraph, gamma: tuple[Fraction, ...], checks: Iterable[int], box: int | None) -> EdgeWeighting | None:
    checks = sorted(set(checks))
    edges = [(i, j) for j in checks for i in G.check_neighbors[j]]
    col = {e: k for k, e in enumerate(edges)}
    s_col = len(edges)
    A, b = [], []
    for i in range(G.n):
        row = [0] * (s_col + 1)
        for j in G.var_neighbors[i]:
            if (i, j) in col:
                row[col[(i, j)]] = 1
        row[s_col] = 1
        A.append(row)
        b.append(gamma[i])
    for j in checks:
        for i, i2 in itertools.combinations(G.check_neighbors[j], 2):
            row = [0] * (s_col + 1)
            row[col[(i, j)]] = -1
            row[col[(i2, j)]] = -1
            A.append(row)
            b.append(0)
    c = [0] * s_col + [1]
    wb = (None, None) if box is None else (-box, box)
    bounds = [wb] * s_col + [(None, 1)]
    res = linprog(c, A, b, bounds=bounds, maximize=True)
    if res.status != OPTIMAL or res.value <= 0:
        return None
    return EdgeWeighting(G, {e: res.x[k] for e, k in col.items()}, slack=res.value)


def find_dual_witness(G: TannerGraph, gamma, box: int | None = None) -> EdgeWeighting | None:
    """Maximise the slack ``s`` in ``F_i(w) + s <= gamma_i`` under the pair rules.

    A witness exists iff the optimum is positive; the returned weighting
    carries that optimum in ``.slack``.  The slack is capped at 1 so the LP
    stays bounded without boxing ``w``.  An explicit ``box`` bounds ``|w|``;
    note that ``sum |gamma| + 1`` can cut off every witness when degree-1
    and degree-2 checks force large weights.
    """
    gamma = _gamma(G, gamma)
    return _witness_lp(G, gamma, range(G.m), box)


def find_narrow_dual_witness(G: TannerGraph, y, box: int | None = None) -> EdgeWeighting | None:
    """Witness for ``(-1)^y`` using only edges of checks that touch the support of ``y``."""
    bits = _bits(y, G.n)
    U = [i for i, v in enumerate(bits) if v]
    allowed = {j for i in U for j in G.var_neighbors[i]}
    gamma = tuple(Fraction(-1 if v else 1) for v in bits)
    return _witness_lp(G, gamma, allowed, box)


def _hyperflow_node_lp(
    G: TannerGraph, gamma: tuple[Fraction, ...], choice: dict[int, int | None], B: int | None
) -> tuple[Fraction, dict[int, Fraction]] | None:
    """Max slack with decided checks fixed and undecided checks convexified.

    An undecided check ``j`` contributes ``c_ij`` with ``-P_j <= c_ij <= P_j``
    and ``sum_i c_ij = (d_j - 2) P_j``; the vertices of that set are exactly
    the sink patterns of the check.  Substituting ``u = c + P`` keeps every
    column nonnegative.
    """
    live = [j for j in range(G.m) if choice.get(j, -1) is not None]
    pcol = {j: k for k, j in enumerate(live)}
    ucol: dict[tuple[int, int], int] = {}
    for j in live:
        if j not in choice:
            for i in G.check_neighbors[j]:
                ucol[(i, j)] = len(pcol) + len(ucol)
    s_col = len(pcol) + len(ucol)
    width = s_col + 1
    L = math.lcm(*(g.denominator for g in gamma))
    A, b = [], []
    for i in range(G.n):
        row = [0] * width
        for j in G.var_neighbors[i]:
            if j not in pcol:
                continue
            if j in choice:
                row[pcol[j]] += -L if choice[j] == i else L
            else:
                row[ucol[(i, j)]] += L
                row[pcol[j]] -= L
        row[s_col] = L
        A.append(row)
        b.append(int(gamma[i] * L))
    row = [0] * width
    row[s_col] = 1
    A.append(row)
    b.append(1)
    for j in live:
        if B is not None:
            row = [0] * width
            row[pcol[j]] = 1
            A.append(row)
            b.append(B)
        if j in choice:
            continue
        d = len(G.check_neighbors[j])
        tot = [0] * width
        for i in G.check_neighbors[j]:
            row = [0] * width
            row[ucol[(i, j)]] = 1
            row[pcol[j]] = -2
            A.append(row)
            b.append(0)
            tot[ucol[(i, j)]] = 1
        tot[pcol[j]] = -(2 * d - 2)
        A.append(tot)
        b.append(0)
        A.append([-v for v in tot])
        b.append(0)
    c = [0] * s_col + [1]
    res = solve_canonical(c, A, b)
    if not res.optimal or res.value <= 0:
        return None
    return res.value, {j: res.x[k] for j, k in pcol.items()}


def _reaches(adj: list[set[int]], src: int, targets: set[int]) -> bool:
    seen = {src}
    stack = [src]
    while stack:
        u = stack.pop()
        if u in targets:
            return True
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def find_hyperflow(
    G: TannerGraph,
    gamma,
    require_acyclic: bool = False,
    cap: int | None = None,
    box: int | None = None,
    stats: dict | None = None,
) -> tuple[SinkAssignment, EdgeWeighting] | None:
    """Search sink assignments for a hyperflow (acyclic on request).

    Checks are decided in index order.  Options per check: inert (only when
    acyclicity is required, since otherwise ``P_j = 0`` already covers it),
    then sinks at variables with ``gamma_i <= 0``, then the other sinks.  A
    branch is cut when some ``gamma_i <= 0`` variable can no longer become a
    sink, when the sink choice closes a directed cycle, or when the node LP
    (undecided checks convexified over their sink patterns) has no positive
    slack.  The first feasible leaf is returned.
    """
    gamma = _gamma(G, gamma)
    cap = work_cap(HYPERFLOW_CAP) if cap is None else cap
    space = math.prod((d + 1) if require_acyclic else d for d in G.check_degrees)
    if space > cap:
        raise CapacityError("hyperflow assignments", cap, space)
    B = box
    need = frozenset(i for i in range(G.n) if gamma[i] <= 0)
    reach_after = [0] * (G.m + 1)
    for j in range(G.m - 1, -1, -1):
        reach_after[j] = reach_after[j + 1] | G.checks[j]
    counters = {"nodes": 0, "lps": 0}

    def options(j: int) -> list[int | None]:
        nbrs = G.check_neighbors[j]
        opts: list[int | None] = [None] if require_acyclic else []
        opts += [i for i in nbrs if i in need] + [i for i in nbrs if i not in need]
        return opts

    adj: list[set[int]] = [set() for _ in range(G.n)]
    choice: dict[int, int | None] = {}

    def covered_ok(t: int) -> bool:
        sinks = {s for s in choice.values() if s is not None}
        missing = [i for i in need if i not in sinks]
        if any(not reach_after[t] >> i & 1 for i in missing):
            return False
        return len(missing) <= G.m - t

    def dfs(t: int):
        counters["nodes"] += 1
        counters["lps"] += 1
        sol = _hyperflow_node_lp(G, gamma, choice, B)
        if sol is None:
            return None
        if t == G.m:
            _, P = sol
            return {j: (choice[j], P[j]) for j in P}
        for opt in options(t):
            added = []
            if opt is not None:
                others = {i for i in G.check_neighbors[t] if i != opt}
                if require_acyclic and _reaches(adj, opt, others):
                    continue
                for i in others:
                    if opt not in adj[i]:
                        adj[i].add(opt)
                        added.append(i)
            choice[t] = opt
            if covered_ok(t + 1):
                found = dfs(t + 1)
                if found is not None:
                    return found
            del choice[t]
            for i in added:
                adj[i].discard(opt)
        return None

    flows = dfs(0)
    if stats is not None:
        stats.update(counters)
    if flows is None:
        return None
    D = SinkAssignment(G, flows)
    w = D.weighting()
    if not verify_hyperflow(G, gamma, w):
        raise InvariantError("hyperflow search returned an invalid weighting")
    if require_acyclic and not D.is_acyclic():
        raise InvariantError("acyclic hyperflow search returned a cycle")
    return D, w


# -------------------------------------------------------- switch / primitive


def _degrees(D: SinkAssignment, i: int) -> tuple[int, int]:
    return len(D.in_checks(i)), len(D.out_checks(i))


def switch(
    G: TannerGraph,
    gamma,
    D: SinkAssignment,
    j: int,
    i: int,
    j2: int,
    check: bool = True,
) -> tuple[SinkAssignment, dict]:
    """Switch the acyclic hyperflow ``D`` along ``j -> i -> j2``.

    ``G`` must be closed under XOR of checks (all redundant checks).  Returns
    the new assignment and an event record.  With ``check`` the switch
    re-verifies validity and acyclicity, that no variable gains inflow or
    outflow, and that the degree of ``i`` strictly drops.
    """
    gamma = _gamma(G, gamma)
    if D.graph != G:
        raise StructuralError("assignment belongs to a different graph")
    if j not in D.flows or D.flows[j][0] != i:
        raise StructuralError(f"({j} -> {i}) is not an edge of the WDG")
    if j2 not in D.flows or D.flows[j2][0] == i or not G.checks[j2] >> i & 1:
        raise StructuralError(f"({i} -> {j2}) is not an edge of the WDG")
    if check and not D.is_acyclic():
        raise StructuralError("switch needs an acyclic hyperflow")
    Pj, Pj2 = D.flows[j][1], D.flows[j2][1]
    P = min(Pj, Pj2)
    i2 = D.flows[j2][0]
    jn = G.index_of(G.checks[j] ^ G.checks[j2])
    if not G.checks[jn] >> i2 & 1:
        raise InvariantError(f"sink {i2} cancelled in the XOR of checks {j} and {j2}")
    flows = dict(D.flows)
    for c, Pc in ((j, Pj), (j2, Pj2)):
        left = Pc - P
        if left:
            flows[c] = (flows[c][0], left)
        else:
            del flows[c]
    if jn in flows:
        if flows[jn][0] != i2:
            raise InvariantError(f"check {jn} already active with a different sink")
        flows[jn] = (i2, flows[jn][1] + P)
    else:
        flows[jn] = (i2, P)
    new = SinkAssignment(G, flows)
    if check:
        if not verify_hyperflow(G, gamma, new) or not new.is_acyclic():
            raise InvariantError("switch broke the acyclic hyperflow property")
        for v in range(G.n):
            if new.in_flow(v) > D.in_flow(v) or new.out_flow(v) > D.out_flow(v):
                raise InvariantError(f"switch increased a flow at variable {v}")
        bi, bo = _degrees(D, i)
        ai, ao = _degrees(new, i)
        if ai > bi or ao > bo or ai + ao >= bi + bo:
            raise InvariantError(f"switch did not reduce the degree of variable {i}")
    event = {"j": j, "i": i, "j2": j2, "j_new": jn, "sink": i2, "P": frac_str(P)}
    return new, event


@dataclass
class PrimitivizeResult:
    assignment: SinkAssignment
    trace: list[dict]
    verified: bool

    @property
    def weighting(self) -> EdgeWeighting:
        return self.assignment.weighting()

    def trace_json(self) -> str:
        return json.dumps(self.trace)


def primitivize(G: TannerGraph, gamma, D, check: bool = True) -> PrimitivizeResult:
    """Turn an acyclic hyperflow on the all-redundant-checks graph into a primitive one.

    For each variable, switch along ``(min In(i), i, min Out(i))`` until one
    side is empty; then drop every check that feeds a ``gamma_i > 0`` variable.
    The result is verified; ``verified`` is False (and a warning logged) if
    the final weighting is not a primitive hyperflow.
    """
    gamma = _gamma(G, gamma)
    D = D if isinstance(D, SinkAssignment) else SinkAssignment.from_weighting(D)
    if not verify_hyperflow(G, gamma, D):
        raise StructuralError("primitivize needs a hyperflow for gamma")
    if not D.is_acyclic():
        raise StructuralError("primitivize needs an acyclic hyperflow")
    trace: list[dict] = []
    for i in range(G.n):
        while True:
            ins, outs = D.in_checks(i), D.out_checks(i)
            if not ins or not outs:
                break
            D, event = switch(G, gamma, D, ins[0], i, outs[0], check=check)
            trace.append(event)
    flows = dict(D.flows)
    for i in range(G.n):
        if gamma[i] > 0:
            for j in [c for c, (s, _) in flows.items() if s == i]:
                trace.append({"remove": j, "i": i})
                del flows[j]
    D = SinkAssignment(G, flows)
    ok = is_primitive(G, gamma, D)
    if not ok:
        log.warning("primitivize output failed final verification")
    return PrimitivizeResult(D, trace, ok)


# ------------------------------------------------------------ superposition


def superpose(w1, w2) -> EdgeWeighting:
    """Edgewise sum; pair inequalities that held in both still hold."""
    w1, w2 = _as_weighting(w1), _as_weighting(w2)
    if w1.graph != w2.graph:
        raise StructuralError("cannot superpose weightings on different graphs")
    out = dict(w1.w)
    for e, v in w2.w.items():
        out[e] = out.get(e, Fraction(0)) + v
    w = EdgeWeighting(w1.graph, out)
    if not pair_violations(w1) and not pair_violations(w2) and pair_violations(w):
        raise InvariantError("superposition broke a pair inequality")
    return w


@dataclass
class TrimResult:
    assignment: SinkAssignment
    weighting: EdgeWeighting
    risky: frozenset[int]
    removed: tuple[int, ...]
    report: dict


def trim_high_degree(G: TannerGraph, x, w, k: int, delta) -> TrimResult:
    """Drop the checks of degree above ``k`` from a primitive hyperflow.

    ``w`` must be primitive for ``(-1)^x - delta/4``.  Risky variables are
    error positions receiving at least ``delta/8`` from the dropped checks.
    The report records the three guarantees, each of which is asserted:
    ``F_i <= 0`` on the risky set, ``F_i < (-1)^{x_i} - delta/8`` elsewhere,
    and ``|U| <= 8n / (delta (k - 1))``.
    """
    delta = to_fraction(delta)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    bits = _bits(x, G.n)
    gamma = shifted_llr(bits, -delta / 4)
    D = w if isinstance(w, SinkAssignment) else SinkAssignment.from_weighting(w)
    if not is_primitive(G, gamma, D):
        raise StructuralError("trim_high_degree needs a primitive hyperflow for (-1)^x - delta/4")
    removed = tuple(sorted(j for j in D.flows if G.check_degrees[j] > k))
    lost = [Fraction(0)] * G.n
    for j in removed:
        s, P = D.flows[j]
        lost[s] += P
    risky = frozenset(i for i in range(G.n) if bits[i] and lost[i] >= delta / 8)
    kept = SinkAssignment(G, {j: v for j, v in D.flows.items() if j not in removed})
    wk = kept.weighting()
    F = wk.flows()
    on_u = all(F[i] <= 0 for i in risky)
    off_u = all(F[i] < (-1 if bits[i] else 1) - delta / 8 for i in range(G.n) if i not in risky)
    bound = Fraction(8 * G.n) / (delta * (k - 1)) if k > 1 else None
    size_ok = bound is None or len(risky) <= bound
    report = {
        "removed": len(removed),
        "risky": sorted(risky),
        "risky_bound": None if bound is None else frac_str(bound),
        "flow_le_zero_on_risky": on_u,
        "excess_off_risky": off_u,
        "risky_size_ok": size_ok,
    }
    if not (on_u and off_u and size_ok):
        raise InvariantError(f"trim guarantees violated: {report}")
    return TrimResult(kept, wk, risky, removed, report)


def variable_layers(G: TannerGraph, U: Iterable[int], depth: int) -> list[frozenset[int]]:
    """``[U^0, ..., U^depth]`` with ``U^{t+1}`` the variables sharing a check with ``U^t``."""
    layers = [frozenset(U)]
    for _ in range(depth):
        cur = layers[-1]
        nxt = set(cur)
        for i in cur:
            for j in G.var_neighbors[i]:
                nxt.update(G.check_neighbors[j])
        layers.append(frozenset(nxt))
    return layers


def cascade_superpose(G: TannerGraph, U: Iterable[int], B: int, box: int | None = None) -> EdgeWeighting | None:
    """Sum of narrow witnesses for the indicators of ``U^0, ..., U^{B-1}``.

    On success the result satisfies ``F_i < -B`` on ``U``, ``F_i < -(B-s-1)``
    on ``U^s \\ U^{s-1}`` (``1 <= s <= B-1``), ``F_i < 1`` on
    ``U^B \\ U^{B-1}`` and ``F_i = 0`` beyond; all of it is asserted, as is
    the neighbourhood growth bound on each layer.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    U = frozenset(U)
    layers = variable_layers(G, U, B)
    r = max(G.var_degrees, default=0) * (G.d_max - 1)
    for t, layer in enumerate(layers):
        bound = (r ** (t + 1) - 1) // (r - 1) * len(U) if r > 1 else (t + 1) * len(U)
        if len(layer) > bound:
            raise InvariantError(f"layer {t} exceeds the neighbourhood growth bound")
    total = EdgeWeighting(G)
    for t in range(B):
        wt = find_narrow_dual_witness(G, indicator(layers[t], G.n), box=box)
        if wt is None:
            return None
        total = superpose(total, wt)
    F = total.flows()
    for i in range(G.n):
        if i in layers[0]:
            ok = F[i] < -B
        elif i in layers[B - 1]:
            s = next(t for t in range(1, B) if i in layers[t])
            ok = F[i] < -(B - s - 1)
        elif i in layers[B]:
            ok = F[i] < 1
        else:
            ok = F[i] == 0
        if not ok:
            raise InvariantError(f"cascade bound fails at variable {i}: F = {F[i]}")
    return total


def witness_to_json(w, gamma=None) -> str:
    return _as_weighting(w).to_json(gamma)


def support(y, n: int | None = None) -> list[int]:
    if isinstance(y, int):
        return bits_of(y)
    return [i for i, v in enumerate(y) if v]


__all__ = [
    "EdgeWeighting",
    "WDG",
    "SinkAssignment",
    "WitnessReport",
    "PrimitivizeResult",
    "TrimResult",
    "verify_dual_witness",
    "verify_hyperflow",
    "is_primitive",
    "verify_weak_dual_witness",
    "find_dual_witness",
    "find_narrow_dual_witness",
    "find_hyperflow",
    "switch",
    "primitivize",
    "superpose",
    "asymmetric_llr",
    "shifted_llr",
    "trim_high_degree",
    "variable_layers",
    "cascade_superpose",
    "indicator",
]
