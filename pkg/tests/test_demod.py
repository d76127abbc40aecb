import numpy as np
import pytest

from conftest import fixture_constellation, worked_example_samples
from oracles import naive_length_correct
from omgrand.constellation import Constellation, Ring
from omgrand.demod import (candidate_set, correct_frame, last_symbol_fallback, length_correct,
                           map_demod, posterior_matrix, receive)
from omgrand.shaping import ShapingCode, bitstring, depad, modulate, symbols_to_bits


def single_ring(k, probs=None):
    ring = Ring(1.0, k)
    p = np.full(k, 1 / k) if probs is None else np.asarray(probs)
    return Constellation(ring.points(), p, np.zeros(k, int), [ring], peak_m=1.0, n0=0.1)


def test_exact_point_uniform_prior():
    cons = single_ring(8)
    res = map_demod(cons.points, cons, 0.1)
    np.testing.assert_array_equal(res.symbols, np.arange(8))


def test_uniform_prior_is_minimum_distance(fixture_cons):
    cons = Constellation(fixture_cons.points, np.full(20, 0.05), fixture_cons.ring_index,
                         fixture_cons.rings, 2.5, 0.01)
    y = np.random.default_rng(0).uniform(-2.6, 2.6, (10 ** 4, 2)) @ [1, 1j]
    res = map_demod(y, cons, 0.05)
    np.testing.assert_array_equal(res.symbols, np.argmin(np.abs(y[:, None] - cons.points), axis=1))


def test_prior_breaks_equidistance():
    ring = Ring(1.0, 2)
    cons = Constellation(ring.points(), [0.9, 0.1], [0, 0], [ring], 1.0, 0.1)
    res = map_demod([0.0 + 0.3j], cons, 0.1)
    assert res.symbols[0] == 0
    assert res.posteriors[0] == pytest.approx(0.9, abs=1e-12)


def test_ties_go_to_lowest_index():
    ring = Ring(1.0, 2)
    cons = Constellation(np.array([1.0, -1.0]), [0.5, 0.5], [0, 0], [ring], 1.0, 0.1)
    assert map_demod([1j], cons, 0.2).symbols[0] == 0


def test_posterior_matrix_consistent(fixture_cons):
    y = np.random.default_rng(3).normal(size=(50, 2)) @ [1, 1j]
    post = posterior_matrix(y, fixture_cons, 0.05)
    np.testing.assert_allclose(post.sum(axis=1), 1.0, atol=1e-9)
    res = map_demod(y, fixture_cons, 0.05)
    np.testing.assert_allclose(res.posteriors, post[np.arange(50), res.symbols], rtol=1e-9)
    assert np.all((res.posteriors > 0) & (res.posteriors <= 1))


def test_map_rejects_bad_noise(fixture_cons):
    with pytest.raises(ValueError):
        map_demod([0j], fixture_cons, 0.0)


def test_candidate_set_worked_example(fixture_cons):
    np.testing.assert_array_equal(candidate_set(9, fixture_cons), [5, 6, 7, 8, 10, 11, 12, 13])


def test_candidate_set_single_ring():
    np.testing.assert_array_equal(candidate_set(2, single_ring(5)), [0, 1, 3, 4])


def test_candidate_set_boundaries(fixture_cons):
    # innermost positive ring: origin, own ring and the next ring out
    np.testing.assert_array_equal(candidate_set(1, fixture_cons), [0, 2, 3, 4, 5, 6, 7])
    np.testing.assert_array_equal(candidate_set(0, fixture_cons), [1, 2, 3, 4])


def test_length_correct_worked_example(fixture_cons, fixture_code):
    y = worked_example_samples(fixture_cons)
    demod = map_demod(y, fixture_cons, 0.01, fixture_code)
    np.testing.assert_array_equal(demod.symbols, [9, 4, 15])
    assert bitstring(demod.bits) == "10010111"
    assert np.argmin(demod.posteriors) == 0
    alts = candidate_set(9, fixture_cons)
    post = posterior_matrix(y[:1], fixture_cons, 0.01)[0]
    assert alts[np.argmax(post[alts])] == 7
    assert bitstring(length_correct(y, demod, 7, fixture_cons, fixture_code, 0.01)) == "1110111"


def test_correct_length_is_untouched(fixture_cons, fixture_code):
    y = worked_example_samples(fixture_cons)
    demod = map_demod(y, fixture_cons, 0.01, fixture_code)
    out = correct_frame(y, demod, 8, fixture_cons, fixture_code, 0.01)
    np.testing.assert_array_equal(out.symbols, demod.symbols)
    assert out.corrected_position == -1


@pytest.mark.parametrize("seed", range(40))
def test_length_correct_matches_naive_search(seed, fixture_cons, fixture_code):
    rng = np.random.default_rng(seed)
    n0 = 0.02
    msg = rng.integers(0, 2, rng.integers(1, 40), dtype=np.uint8)
    tx = modulate(msg, fixture_code).symbols
    y = fixture_cons.points[tx] + np.sqrt(n0 / 2) * (rng.normal(size=tx.size) + 1j * rng.normal(size=tx.size))
    demod = last_symbol_fallback(map_demod(y, fixture_cons, n0, fixture_code), fixture_cons, y, n0,
                                 fixture_code)
    out = correct_frame(y, demod, msg.size, fixture_cons, fixture_code, n0)
    ref = naive_length_correct(y, demod.symbols, demod.posteriors, msg.size, fixture_cons,
                               fixture_code, n0)
    np.testing.assert_array_equal(out.symbols, ref)
    assert np.count_nonzero(out.symbols != demod.symbols) <= 1


def test_fallback_noop_when_last_has_one(fixture_cons, fixture_code):
    y = fixture_cons.points[[7, 4, 15]]
    demod = map_demod(y, fixture_cons, 0.01, fixture_code)
    out = last_symbol_fallback(demod, fixture_cons, y, 0.01, fixture_code)
    assert out is demod and not out.fallback_used


def test_fallback_replaces_all_zero_codeword(fixture_cons, fixture_code):
    # symbol 0 ("0000") sits at the origin; nudge towards point 1 so it is runner-up
    y = np.array([fixture_cons.points[7], 0.1 * fixture_cons.points[1]])
    demod = map_demod(y, fixture_cons, 0.01, fixture_code)
    assert demod.symbols[-1] == 0
    out = last_symbol_fallback(demod, fixture_cons, y, 0.01, fixture_code)
    assert out.fallback_used and out.symbols[-1] == 1
    assert bitstring(out.bits) == bitstring(depad(symbols_to_bits([7, 1], fixture_code)))
    post = posterior_matrix(y[-1:], fixture_cons, 0.01)[0]
    assert out.posteriors[-1] == pytest.approx(post[1], rel=1e-9)


def test_fallback_two_points():
    ring = Ring(1.0, 2)
    cons = Constellation(ring.points(), [0.5, 0.5], [0, 0], [ring], 1.0, 0.1)
    code = ShapingCode(["0", "1"], cons.probs)
    for y in (0.9 + 0j, 0.2 + 0.1j):
        demod = map_demod([y], cons, 0.1, code)
        if demod.symbols[-1] == 0:
            assert last_symbol_fallback(demod, cons, [y], 0.1, code).symbols[-1] == 1


def test_noiseless_receive(fixture_cons, fixture_code):
    rng = np.random.default_rng(9)
    for _ in range(200):
        msg = rng.integers(0, 2, rng.integers(0, 50), dtype=np.uint8)
        tx = modulate(msg, fixture_code).symbols
        res = receive(fixture_cons.points[tx], fixture_cons, fixture_code, 1e-6, msg.size)
        np.testing.assert_array_equal(res.symbols, tx)
        np.testing.assert_array_equal(res.bits, msg)


def test_receive_without_correction(fixture_cons, fixture_code):
    y = worked_example_samples(fixture_cons)
    res = receive(y, fixture_cons, fixture_code, 0.01, 7, correct=False)
    assert bitstring(res.bits) == "10010111"
