from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from oracles import p_indel_reference
from omgrand.channel import DomainError
from omgrand.constellation import Constellation, Ring
from omgrand.framing import (DEFAULT_A_GRID, NS_CAP, estimate_p_indel, eb_n0, expected_pad_bits,
                             frame_rate, make_plan, n0_for, prob_two_or_more, select_ns, tune_a)
from omgrand.shaping import ShapingCode, build_code, modulate


def psk(k):
    ring = Ring(1.0, k)
    return Constellation(ring.points(), np.full(k, 1 / k), np.zeros(k, int), [ring], 1.0, 0.1)


# --- p_indel -------------------------------------------------------------------

def test_p_indel_noiseless_is_censored(paper_link):
    est = estimate_p_indel(paper_link.cons, paper_link.code, 1e12, trials=10 ** 4, rng=0)
    assert est.events == 0 and est.censored
    assert est.p == pytest.approx(3e-4)


def test_p_indel_equal_lengths_is_zero():
    cons = psk(2)
    est = estimate_p_indel(cons, build_code(cons.probs), 1.0, trials=10 ** 4, rng=0)
    assert est.p == 0.0 and not est.censored


def test_p_indel_needs_trials(paper_link):
    with pytest.raises(DomainError):
        estimate_p_indel(paper_link.cons, paper_link.code, 100.0, trials=100)


def test_p_indel_matches_reference(paper_link):
    cons, code = paper_link.cons, paper_link.code
    es = 10 ** 2.2
    est = estimate_p_indel(cons, code, es, trials=2 * 10 ** 5, rng=1)
    ref = p_indel_reference(cons, code, n0_for(cons, es), 2 * 10 ** 5, seed=2)
    se = np.sqrt(est.stderr ** 2 + ref * (1 - ref) / (2 * 10 ** 5))
    assert abs(est.p - ref) < 3 * se


# --- select_ns -----------------------------------------------------------------

def binom_scan(p, a, upto):
    n = np.arange(1, upto + 1)
    ok = stats.binom.sf(1, n, p) <= a * p
    return int(n[ok].max()), not ok[1]


def test_select_ns_floor():
    assert select_ns(0.5, 1e-9) == (1, True)


def test_select_ns_example():
    n = np.arange(1, NS_CAP + 1)
    brute = int(n[prob_two_or_more(n, 1e-3) <= 0.05 * 1e-3].max())
    assert select_ns(1e-3, 0.05) == (brute, False)
    assert brute == binom_scan(1e-3, 0.05, 2000)[0]


def test_select_ns_random_pairs():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        p = 10 ** rng.uniform(-4, np.log10(0.5))
        a = 10 ** rng.uniform(-6, 0)
        # with p >= 1e-4 and a <= 1 the answer stays far below the scan limit
        got = select_ns(p, a)
        assert got[0] < 1500
        assert got == binom_scan(p, a, 2000)


def test_select_ns_monotone_in_a():
    for p in (1e-4, 3e-3, 0.05, 0.3):
        ns = [select_ns(p, a)[0] for a in np.geomspace(1e-6, 1, 25)]
        assert np.all(np.diff(ns) >= 0)


def test_select_ns_cap():
    assert select_ns(1e-12, 1.0) == (NS_CAP, False)


def test_select_ns_domain():
    with pytest.raises(DomainError):
        select_ns(0.0, 0.1)
    with pytest.raises(DomainError):
        select_ns(0.1, 0.0)


def test_two_or_more_matches_binomial():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 5000))
        p = 10 ** rng.uniform(-6, -0.5)
        assert prob_two_or_more(n, p) == pytest.approx(stats.binom.sf(1, n, p), rel=1e-9, abs=1e-300)


# --- padding overhead and rate ---------------------------------------------------

def test_expected_pad_bits_small_tree():
    # "0", "10", "11": ending at the root pads "10" (2 bits), at node "1" pads "1" (1 bit)
    code = ShapingCode(["0", "10", "11"])
    assert expected_pad_bits(code) == Fraction(1 * 2 + Fraction(1, 2) * 1, Fraction(3, 2))


def test_expected_pad_bits_monte_carlo(fixture_code):
    rng = np.random.default_rng(0)
    pads = [modulate(rng.integers(0, 2, 200, dtype=np.uint8), fixture_code).pad_length
            for _ in range(20000)]
    se = np.std(pads) / np.sqrt(len(pads))
    assert abs(np.mean(pads) - float(expected_pad_bits(fixture_code))) < 4 * se


def test_rate_table_rows(paper_link):
    code = paper_link.code
    assert frame_rate(1594, code) == pytest.approx(0.998, abs=0.005)
    assert frame_rate(56, code) == pytest.approx(0.934, abs=0.01)


def test_rate_increases_to_one(paper_link):
    rates = [frame_rate(n, paper_link.code) for n in (1, 10, 100, 10 ** 4, 10 ** 8)]
    assert np.all(np.diff(rates) > 0)
    assert rates[-1] > 1 - 1e-7
    with pytest.raises(DomainError):
        frame_rate(0, paper_link.code)


def test_bits_per_symbol_near_table(paper_link):
    plan = make_plan(paper_link.cons, paper_link.code, 10 ** 2.8, 1e-5, 0.1, n_symbols=252)
    # 1594 message bits over 252 symbols
    assert plan.n_bits / plan.n_symbols == pytest.approx(1594 / 252, rel=0.03)


# --- Eb/N0 ------------------------------------------------------------------------

def test_eb_n0_psk():
    cons = psk(4)
    assert eb_n0(1.0, 10 ** 12, cons) == pytest.approx(0.5)
    assert eb_n0(1.0, 1, cons) == pytest.approx(1.0)


def test_eb_n0_decreasing_in_ns(paper_link):
    vals = [eb_n0(100.0, n, paper_link.cons) for n in (1, 2, 5, 50, 5000)]
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] == pytest.approx(100.0 / paper_link.cons.entropy_bits, rel=1e-3)


def test_eb_n0_single_point():
    ring = Ring(1.0, 1)
    cons = Constellation(np.array([1.0 + 0j]), [1.0], [0], [ring], 1.0, 0.1)
    with pytest.raises(DomainError):
        eb_n0(1.0, 5, cons)
    with pytest.raises(DomainError):
        eb_n0(1.0, 0, psk(4))


def test_plan_fields(paper_link):
    plan = make_plan(paper_link.cons, paper_link.code, 10 ** 2.4, 1e-3, 0.05)
    assert plan.n_symbols == select_ns(1e-3, 0.05)[0]
    assert plan.n_bits == round(plan.n_symbols * paper_link.code.mean_length)
    assert 0 < plan.rate <= 1 and not plan.floored


# --- tuning -------------------------------------------------------------------------

def test_tune_single_candidate(paper_link):
    a, bers = tune_a(paper_link.cons, paper_link.code, 100.0, [0.2])
    assert a == 0.2


def test_tune_picks_recorded_argmin(paper_link):
    a, bers = tune_a(paper_link.cons, paper_link.code, 10 ** 2.3, DEFAULT_A_GRID,
                     budget_bits=2 * 10 ** 5, p_indel=None, seed=3)
    assert set(bers) == set(DEFAULT_A_GRID)
    best = min(bers.values())
    assert bers[a] == best and a == min(x for x in bers if bers[x] == best)


def test_tune_noiseless_takes_smallest(paper_link):
    a, bers = tune_a(paper_link.cons, paper_link.code, 1e12, DEFAULT_A_GRID, budget_bits=20000)
    assert all(b == 0 for b in bers.values())
    assert a == min(DEFAULT_A_GRID)


def test_tune_empty_grid(paper_link):
    with pytest.raises(DomainError):
        tune_a(paper_link.cons, paper_link.code, 100.0, [])
