import itertools
import json
from fractions import Fraction as F

import numpy as np
import pytest

from lp_lab.errors import StructuralError
from lp_lab.gf2_tanner import (
    TannerGraph,
    augment,
    check_expansion,
    girth,
    sample_check_regular,
    sample_variable_regular,
)
from lp_lab.lp_core import channel_llr, lp_decode
from lp_lab.witness import (
    WDG,
    EdgeWeighting,
    SinkAssignment,
    asymmetric_llr,
    cascade_superpose,
    find_dual_witness,
    find_hyperflow,
    find_narrow_dual_witness,
    indicator,
    is_primitive,
    pair_violations,
    primitivize,
    shifted_llr,
    superpose,
    switch,
    trim_high_degree,
    variable_layers,
    verify_dual_witness,
    verify_hyperflow,
    verify_weak_dual_witness,
)

A, B_, K, I, G_, I2, H = range(7)


def switch_graph():
    """Checks j = {a, b, k, i}, j' = {i, g, k, i'}, e = {i, h} and all their sums."""
    base = TannerGraph.from_lists(7, [[A, B_, K, I], [I, G_, K, I2], [I, H]])
    Gb = augment(base)
    return base, Gb, [Gb.index_of(c) for c in base.checks]


def switch_case(Pj, Pj2, Pe, gamma_i):
    base, Gb, (J, J2, E) = switch_graph()
    gamma = [1] * 7
    gamma[I] = gamma_i
    gamma[K] = F(3, 2)
    D = SinkAssignment(Gb, {J: (I, Pj), J2: (I2, Pj2), E: (I, Pe)})
    return Gb, gamma, D, (J, J2, E)


def random_instance(rng, n_max=8, m_max=5, d_max=4):
    n = int(rng.integers(3, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    checks = [sorted(rng.choice(n, int(rng.integers(2, min(d_max, n) + 1)), replace=False).tolist()) for _ in range(m)]
    G = TannerGraph.from_lists(n, checks)
    y = int(rng.integers(0, 1 << n)) & int(rng.integers(0, 1 << n))
    return G, y


def test_zero_weighting_is_witness_for_positive_llr():
    G = sample_check_regular(6, 3, 3, 0)
    assert verify_dual_witness(G, [1] * 6, EdgeWeighting(G)).valid


def test_single_check_has_no_witness():
    G = TannerGraph.from_lists(3, [[0, 1, 2]])
    gamma = [-1, 1, 1]
    assert find_dual_witness(G, gamma) is None
    assert find_hyperflow(G, gamma) is None
    assert find_hyperflow(G, gamma, require_acyclic=True) is None
    assert not lp_decode(G, gamma).success
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = EdgeWeighting(G, {(i, 0): F(int(v), 4) for i, v in zip(range(3), rng.integers(-8, 9, size=3))})
        assert not verify_dual_witness(G, gamma, w).valid


def test_pair_rule_violation_reported():
    G = TannerGraph.from_lists(3, [[0, 1, 2]])
    w = EdgeWeighting(G, {(0, 0): F(-2), (1, 0): F(1), (2, 0): F(3)})
    assert pair_violations(w) == [("check", 0, 0, 1, F(-1))]
    assert not verify_dual_witness(G, [5, 5, 5], w).valid


def test_wdg_flow_identity():
    rng = np.random.default_rng(4)
    G = sample_check_regular(7, 4, 3, 2)
    for _ in range(20):
        w = EdgeWeighting(G, {e: F(int(rng.integers(-5, 6)), 3) for e in G.edges})
        wdg = WDG.of(w)
        assert all(w.flow(i) == wdg.out_flow[i] - wdg.in_flow[i] for i in range(G.n))


def test_positive_llr_finds_inert_hyperflow():
    G = sample_check_regular(6, 3, 3, 1)
    D, w = find_hyperflow(G, [1] * 6, require_acyclic=True)
    assert not D.flows
    assert find_dual_witness(G, [1] * 6).slack >= 1


def test_sink_assignment_is_hyperflow():
    G = sample_check_regular(6, 3, 3, 3)
    D = SinkAssignment(G, {j: (G.check_neighbors[j][0], F(1, 3)) for j in range(G.m)})
    assert verify_hyperflow(G, [5] * 6, D.weighting())


def test_switch_splits_heavier_in_edge():
    Gb, gamma, D, (J, J2, E) = switch_case(F(9, 10), F(1, 2), F(7, 10), -1)
    assert verify_hyperflow(Gb, gamma, D)
    assert not is_primitive(Gb, gamma, D)
    assert D.in_checks(I) and D.out_checks(I)
    new, ev = switch(Gb, gamma, D, J, I, J2)
    assert ev["P"] == "1/2"
    assert new.flows[J] == (I, F(2, 5))
    assert J2 not in new.flows
    assert new.flows[ev["j_new"]] == (I2, F(1, 2))
    assert Gb.checks[ev["j_new"]] == Gb.checks[J] ^ Gb.checks[J2]
    res = primitivize(Gb, gamma, D)
    assert res.verified and is_primitive(Gb, gamma, res.assignment)


def test_switch_consumes_lighter_in_edge():
    Gb, gamma, D, (J, J2, E) = switch_case(F(1, 2), F(9, 10), F(3, 10), 1)
    new, ev = switch(Gb, gamma, D, J, I, J2)
    assert ev["P"] == "1/2"
    assert J not in new.flows
    assert new.flows[J2] == (I2, F(2, 5))
    assert new.flows[ev["j_new"]] == (I2, F(1, 2))
    res = primitivize(Gb, gamma, D)
    assert res.verified
    assert json.loads(res.trace_json())


def test_equal_weights_switch_drops_both_edges():
    Gb, gamma, D, (J, J2, E) = switch_case(F(1, 2), F(1, 2), F(7, 10), 1)
    assert verify_hyperflow(Gb, gamma, D)
    new, ev = switch(Gb, gamma, D, J, I, J2)
    assert J not in new.flows and J2 not in new.flows
    assert len(new.in_checks(I)) == len(D.in_checks(I)) - 1
    assert len(new.out_checks(I)) == len(D.out_checks(I)) - 1


def test_switch_rejects_non_edges():
    Gb, gamma, D, (J, J2, E) = switch_case(F(9, 10), F(1, 2), F(7, 10), -1)
    with pytest.raises(StructuralError):
        switch(Gb, gamma, D, J2, I, J)


def test_primitive_input_unchanged():
    Gb, gamma, D, _ = switch_case(F(9, 10), F(1, 2), F(7, 10), -1)
    P = primitivize(Gb, gamma, D).assignment
    again = primitivize(Gb, gamma, P)
    assert again.assignment == P and not [e for e in again.trace if "j" in e]


def test_error_variable_with_outflow_is_not_primitive():
    G = TannerGraph.from_lists(4, [[0, 1, 2], [0, 3]])
    gamma = [0, 1, 1, 1]
    D = SinkAssignment(G, {0: (2, F(1, 4)), 1: (0, F(1, 2))})
    assert verify_hyperflow(G, gamma, D)
    assert not is_primitive(G, gamma, D)
    assert is_primitive(G, gamma, SinkAssignment(G, {1: (0, F(1, 2))}))


def test_primitivize_on_tiny_codes():
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(120):
        n = int(rng.integers(4, 7))
        base = sample_check_regular(n, int(rng.integers(2, 4)), 3, int(rng.integers(1 << 30)))
        Gb = augment(base)
        y = int(rng.integers(0, 1 << n)) & int(rng.integers(0, 1 << n))
        gamma = channel_llr(y, n)
        if not lp_decode(Gb, gamma).success:
            continue
        D, _ = find_hyperflow(Gb, gamma, require_acyclic=True)
        res = primitivize(Gb, gamma, D)
        assert res.verified
        assert verify_hyperflow(Gb, gamma, res.assignment) and res.assignment.is_acyclic()
        checked += 1
    assert checked >= 20


def test_superpose_properties():
    rng = np.random.default_rng(2)
    G = sample_check_regular(6, 3, 3, 4)
    w1 = EdgeWeighting(G, {e: F(int(rng.integers(-3, 4))) for e in G.edges})
    w2 = EdgeWeighting(G, {e: F(int(rng.integers(-3, 4))) for e in G.edges})
    assert superpose(w1, EdgeWeighting(G)) == w1
    s = superpose(w1, w2)
    assert all(s.flow(i) == w1.flow(i) + w2.flow(i) for i in range(G.n))
    with pytest.raises(StructuralError):
        superpose(w1, EdgeWeighting(sample_check_regular(6, 3, 3, 5)))


def test_superposed_witnesses_verify_against_sum():
    G = sample_variable_regular(8, 6, 3, 1)
    g1 = [F(1)] * 8
    g2 = list(shifted_llr(0b1, 0, 8))
    w1, w2 = find_dual_witness(G, g1), find_dual_witness(G, g2)
    assert w1 is not None and w2 is not None
    assert verify_dual_witness(G, [a + b for a, b in zip(g1, g2)], superpose(w1, w2)).valid


def test_llr_helpers():
    assert asymmetric_llr(0, F(1, 3), 3) == (F(1, 3),) * 3
    assert asymmetric_llr(0b101, 1, 3) == channel_llr(0b101, 3)
    assert asymmetric_llr(0b010, F(1, 2), 3) == (F(1, 2), F(-1), F(1, 2))
    assert shifted_llr(0b11, 0, 3) == channel_llr(0b11, 3)
    assert shifted_llr(0, F(-1, 2), 2) == (F(1, 2), F(1, 2))


def test_excess_monotone():
    rng = np.random.default_rng(6)
    for _ in range(30):
        G, y = random_instance(rng, n_max=7)
        if find_dual_witness(G, shifted_llr(y, F(-1, 4), G.n)) is not None:
            assert find_dual_witness(G, shifted_llr(y, F(-1, 8), G.n)) is not None
            assert find_dual_witness(G, shifted_llr(y, 0, G.n)) is not None


def test_weak_witness_rules():
    G = sample_variable_regular(8, 6, 3, 2)
    y = 0b1
    w = find_dual_witness(G, channel_llr(y, 8))
    assert w is not None
    assert all(verify_weak_dual_witness(G, y, w, b) for b in range(3))
    zero = EdgeWeighting(G)
    for y in (0, 0b1, 0b11, 0b111):
        for b in range(4):
            assert verify_weak_dual_witness(G, y, zero, b) == (bin(y).count("1") <= b)


def test_weak_witness_matches_definition():
    rng = np.random.default_rng(13)
    G = sample_check_regular(6, 4, 3, 7)
    for _ in range(200):
        w = EdgeWeighting(G, {e: F(int(rng.integers(-4, 5)), 2) for e in G.edges})
        y = int(rng.integers(0, 64))
        b = int(rng.integers(0, 3))
        flows = [sum(w.get(i, j) for j in G.var_neighbors[i]) for i in range(6)]
        pairs_ok = all(
            w.get(a, j) + w.get(c, j) >= 0 for j in range(G.m) for a, c in itertools.combinations(G.check_neighbors[j], 2)
        )
        err = [i for i in range(6) if y >> i & 1]
        expected = pairs_ok and all(f < 1 for f in flows) and sum(1 for i in err if not flows[i] < -1) <= b
        assert verify_weak_dual_witness(G, y, w, b) == expected


def test_trim_keeps_everything_for_large_k():
    _, Gb, _ = switch_graph()
    x = 1 << I
    delta = F(1, 2)
    gamma = shifted_llr(x, -delta / 4, 7)
    found = find_hyperflow(Gb, gamma, require_acyclic=True)
    assert found is not None
    D = primitivize(Gb, gamma, found[0]).assignment
    tr = trim_high_degree(Gb, x, D, Gb.d_max, delta)
    assert tr.assignment == D and not tr.risky
    tr0 = trim_high_degree(Gb, x, D, 1, delta)
    assert not tr0.assignment.flows
    assert tr0.risky == frozenset(i for i in range(7) if x >> i & 1 and D.in_flow(i) >= delta / 8)


def test_trim_guarantees_on_random_primitive_hyperflows():
    rng = np.random.default_rng(0)
    trimmed = 0
    for _ in range(200):
        n = int(rng.integers(5, 8))
        base = sample_check_regular(n, int(rng.integers(2, 4)), 3, int(rng.integers(1 << 30)))
        Gb = augment(base)
        x = int(rng.integers(0, 1 << n)) & int(rng.integers(0, 1 << n))
        delta = F(1, 2)
        gamma = shifted_llr(x, -delta / 4, n)
        found = find_hyperflow(Gb, gamma, require_acyclic=True)
        if found is None:
            continue
        D = primitivize(Gb, gamma, found[0]).assignment
        tr = trim_high_degree(Gb, x, D, 3, delta)
        assert all(tr.report[k] for k in ("flow_le_zero_on_risky", "excess_off_risky", "risky_size_ok"))
        trimmed += 1
    assert trimmed >= 30


def test_trim_then_patch_recovers_witness():
    # error variable 0 sits in 20 degree-2 checks, two strong checks and one
    # wide check; trimming at k = 3 drops the wide check and makes 0 risky
    n = 25
    lists = [[0, t] for t in range(1, 21)] + [[0, 21, 22, 23, 24]]
    G = TannerGraph.from_lists(n, lists)
    x = 1
    delta = F(1, 2)
    wide = G.m - 1
    D = SinkAssignment(G, {0: (0, F(1, 2)), 1: (0, F(1, 2)), wide: (0, F(1, 4))})
    assert is_primitive(G, shifted_llr(x, -delta / 4, n), D)
    tr = trim_high_degree(G, x, D, 3, delta)
    assert tr.risky == {0}
    low = G.subgraph([j for j in range(G.m) if G.check_degrees[j] <= 3])
    patch = find_dual_witness(low, asymmetric_llr(indicator(tr.risky, n), delta / 8, n))
    assert patch is not None
    total = superpose(tr.weighting, patch.embed(G))
    assert verify_dual_witness(G, channel_llr(x, n), total).valid


def test_narrow_witness_zero_error():
    G = sample_variable_regular(8, 6, 3, 3)
    w = find_narrow_dual_witness(G, 0)
    assert w is not None and all(v == 0 for v in w.w.values())


def test_narrow_witness_support():
    rng = np.random.default_rng(5)
    for _ in range(30):
        G, y = random_instance(rng, n_max=8)
        w = find_narrow_dual_witness(G, y)
        if w is None:
            continue
        U = [i for i in range(G.n) if y >> i & 1]
        near = variable_layers(G, U, 1)[1]
        assert all(w.flow(i) == 0 for i in range(G.n) if i not in near)


def projective_plane_3() -> TannerGraph:
    """Point-line incidence of PG(2, 3): 13 variables and 13 checks, all of degree 4, girth 6."""
    reps = []
    for v in itertools.product(range(3), repeat=3):
        if any(v) and v[next(t for t in range(3) if v[t])] == 1:
            reps.append(v)
    lines = [[i for i, p in enumerate(reps) if sum(a * b for a, b in zip(p, L)) % 3 == 0] for L in reps]
    return TannerGraph.from_lists(len(reps), lines)


def test_narrow_witness_on_verified_expander():
    # degree-4 variables, expansion factor 3 = (3/4) * 4
    G = projective_plane_3()
    assert girth(G) == 6 and set(G.var_degrees) == {4}
    s = 1
    while check_expansion(G, s + 1, 3).holds:
        s += 1
    assert s == 3
    dlt = F(3, 4)
    weight = int((3 * dlt - 2) / (2 * dlt - 1) * (s - 1))
    assert weight == 1
    for size in range(1, weight + 1):
        for U in itertools.combinations(range(G.n), size):
            w = find_narrow_dual_witness(G, indicator(U, G.n))
            assert w is not None
            assert verify_dual_witness(G, channel_llr(indicator(U, G.n), G.n), w).valid


def test_cascade_single_layer_and_scaling():
    G = sample_variable_regular(12, 9, 3, 1)
    U = [0]
    w1 = cascade_superpose(G, U, 1)
    assert w1 is not None
    assert verify_dual_witness(G, channel_llr(indicator(U, 12), 12), w1).valid
    for B in (2, 3):
        w = cascade_superpose(G, U, B)
        if w is None:
            continue
        scaled = w.scaled(F(1, B))
        assert verify_dual_witness(G, asymmetric_llr(indicator(U, 12), F(1, B), 12), scaled).valid


def test_layer_growth_bound():
    G = sample_variable_regular(20, 10, 3, 2)
    r = max(G.var_degrees) * (G.d_max - 1)
    layers = variable_layers(G, [0, 5], 3)
    for t, layer in enumerate(layers):
        assert len(layer) <= (r ** (t + 1) - 1) // (r - 1) * 2
