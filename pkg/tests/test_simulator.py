import json
import math

import numpy as np
import pytest

from lp_lab.errors import CapacityError, InvariantError
from lp_lab.gf2_tanner import (
    TannerGraph,
    augment,
    delta_min_cyclic_sum,
    popcount,
    sample_check_regular,
    sample_variable_regular,
)
from lp_lab.lp_core import channel_llr, lp_decode
from lp_lab.simulator import (
    ChannelConfig,
    ScanResult,
    ThresholdEstimate,
    Verdicts,
    bsc_sample,
    crossing,
    decode_with_help,
    deficiency_experiment,
    epsilon_prime,
    excess_experiment,
    help_wer,
    high_density_exceptions,
    manifest,
    threshold_scan,
    trial_uniforms,
    wer_estimate,
    word_below,
)
from lp_lab.stats import wilson_interval


@pytest.fixture(scope="module")
def small():
    return sample_variable_regular(8, 6, 3, 2)


def test_channel_config_validation():
    with pytest.raises(ValueError):
        ChannelConfig(0.5, 10, 0)
    with pytest.raises(ValueError):
        ChannelConfig(0.1, 0, 0)


def test_zero_crossover_gives_zero_word():
    assert all(bsc_sample(50, 0.0, s) == 0 for s in range(20))


def test_flip_rate():
    n, eps = 1_000_000, 0.07
    y = bsc_sample(n, eps, 11)
    sigma = math.sqrt(n * eps * (1 - eps))
    assert abs(popcount(y) - n * eps) <= 3 * sigma


def test_sampler_determinism():
    assert bsc_sample(64, 0.2, 5) == bsc_sample(64, 0.2, 5)
    assert bsc_sample(64, 0.2, 5) != bsc_sample(64, 0.2, 6)


def test_patterns_nested_in_epsilon():
    u = trial_uniforms(40, 3, 7)
    small, large = word_below(u, 0.05), word_below(u, 0.2)
    assert small & large == small


def test_wer_zero_crossover(small):
    r = wer_estimate(small, 0.0, 50, 1)
    assert r.failures == 0 and r.wer == 0.0
    assert len(r.seeds) == 50


def test_wer_monotone_trend(small):
    grid = [0.02, 0.08, 0.15, 0.25]
    reps = [wer_estimate(small, e, 300, 2) for e in grid]
    for a, b in zip(reps, reps[1:]):
        sigma = math.sqrt(b.wer * (1 - b.wer) / b.trials + a.wer * (1 - a.wer) / a.trials)
        assert a.wer <= b.wer + 3 * sigma
    assert all(r.ci_lo <= r.wer <= r.ci_hi for r in reps)


def test_wer_parallel_matches_serial(small):
    assert wer_estimate(small, 0.1, 40, 3, jobs=2).failures == wer_estimate(small, 0.1, 40, 3).failures


def test_scan_dominance_and_csv(small):
    variants = [("G", small), ("G4", augment(small, 4)), ("Gbar", augment(small))]
    grid = [0.05, 0.1, 0.2]
    res = threshold_scan(variants, grid, 80, 4)
    assert res.dominance_violations == 0
    assert len(res.to_csv().splitlines()) == 1 + len(grid) * len(variants)
    for e in grid:
        w = [res.reports[(v, e)].wer for v, _ in variants]
        assert w == sorted(w, reverse=True)


def test_scan_detects_reversed_order(small):
    variants = [("Gbar", augment(small)), ("G", small)]
    res = threshold_scan(variants, [0.2, 0.3], 100, 4, strict=False)
    assert res.dominance_violations > 0
    with pytest.raises(InvariantError):
        threshold_scan(variants, [0.2, 0.3], 100, 4)


def test_scan_csv_is_reproducible(small):
    a = threshold_scan([("G", small)], [0.05, 0.15], 60, 9).to_csv()
    b = threshold_scan([("G", small)], [0.05, 0.15], 60, 9).to_csv()
    assert a == b


def ring_graph(m: int) -> TannerGraph:
    """Checks {2t, 2t+1, 2t+2} around a ring; the only cycle uses every check."""
    n = 2 * m
    return TannerGraph.from_lists(n, [[2 * t, 2 * t + 1, (2 * t + 2) % n] for t in range(m)])


def test_rigid_graph_low_weight_sums_do_not_help():
    # every dual word of weight < delta is an acyclic sum of checks
    G = ring_graph(5)
    delta = delta_min_cyclic_sum(G)
    assert delta == 5
    extra = set(augment(G, delta - 1).checks) - set(G.checks)
    assert extra
    H = TannerGraph(G.n, G.checks + tuple(sorted(extra)))
    res = threshold_scan([("G", G), ("H", H)], [0.1, 0.2, 0.3], 200, 1)
    for e in (0.1, 0.2, 0.3):
        assert res.reports[("G", e)].failures == res.reports[("H", e)].failures
    for y in range(1 << G.n):
        if popcount(y) <= 4:
            assert lp_decode(G, channel_llr(y, G.n)).success == lp_decode(H, channel_llr(y, G.n)).success


def test_threshold_grid_must_increase():
    with pytest.raises(ValueError):
        ThresholdEstimate("G", (0.1, 0.1), (0.0, 0.0), {})


def test_crossing_interpolates_without_extrapolation():
    assert crossing([0.1, 0.2, 0.3], [0.0, 0.4, 0.8], 0.5) == pytest.approx(0.225)
    assert crossing([0.1, 0.2], [0.0, 0.2], 0.5) is None
    assert crossing([0.1, 0.2], [0.6, 0.9], 0.5) is None
    assert crossing([0.1, 0.2], [0.5, 0.9], 0.5) == 0.1


def test_help_bits(small):
    rng = np.random.default_rng(1)
    V = Verdicts(small)
    for _ in range(20):
        y = int(rng.integers(0, 1 << small.n))
        assert decode_with_help(small, y, popcount(y), verdicts=V) is not None
        assert (decode_with_help(small, y, 0, verdicts=V) == 0) == V.success(y)
    with pytest.raises(CapacityError):
        decode_with_help(TannerGraph.from_lists(40, [[0, 1]]), 0, 10)


def test_help_returns_minimum_weight(small):
    y = 0b111
    z = decode_with_help(small, y, 3)
    assert z is not None
    for w in range(popcount(z)):
        assert decode_with_help(small, y, w) is None


def test_help_wer_not_worse(small):
    plain, helped = help_wer(small, 0.2, 1, 150, 3)
    assert helped.failures <= plain.failures


def test_high_density_failure():
    for seed in range(3):
        assert high_density_exceptions(sample_check_regular(8, 5, 3, seed)) == []


def test_epsilon_prime_exact():
    assert epsilon_prime(0.1, 0.5) == pytest.approx(0.55)
    assert epsilon_prime("1/10", "1/2") == epsilon_prime(0.1, 0.5)


def test_shift_experiments_at_zero_crossover(small):
    ex = excess_experiment(small, 0.0, 0.2, 50, 1)
    assert ex.freq_a == 1.0 and ex.holds
    de = deficiency_experiment(small, 0.0, 0.2, 50, 1)
    assert de.freq_b == 0.0 and de.holds
    assert json.loads(ex.to_json())["holds"] is True


def test_shift_experiments_hold(small):
    for eps, delta in [(0.03, 0.1), (0.05, 0.3)]:
        assert excess_experiment(small, eps, delta, 300, 2).holds
        assert deficiency_experiment(small, eps, delta, 300, 2).holds


def test_shift_experiment_routes_agree(small):
    a = excess_experiment(small, 0.05, 0.2, 60, 5)
    b = excess_experiment(small, 0.05, 0.2, 60, 5, method="witness")
    assert a == b
    c = deficiency_experiment(small, 0.05, 0.2, 60, 5)
    d = deficiency_experiment(small, 0.05, 0.2, 60, 5, method="witness")
    assert c == d


def test_shift_monotonicity(small):
    V = Verdicts(small)
    for t in range(60):
        y = word_below(trial_uniforms(small.n, 8, t), 0.2)
        if V.success(y, "-1/10"):
            assert V.success(y)
        if V.success(y):
            assert V.success(y, "1/10")


def test_wilson_coverage():
    rng = np.random.default_rng(0)
    p, n = 0.3, 200
    hits = 0
    for _ in range(200):
        k = int((rng.random(n) < p).sum())
        lo, hi = wilson_interval(k, n)
        hits += lo <= p <= hi
    assert hits / 200 >= 0.9


def test_manifest_fields(small):
    m = manifest("sim", {"epsilon": 0.1}, 3, [small])
    assert m["seed"] == 3 and m["graphs"][0]["name"] == small.name
    assert len(m["graphs"][0]["sha256"]) == 64
    assert ScanResult.CSV_FIELDS[0] == "graph_id"
