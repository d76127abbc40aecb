"""The numba kernels and their numpy fallbacks must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from omgrand import kernels
from omgrand._jit import USE_NUMBA


@pytest.fixture(scope="module")
def batch(paper_link):
    link = paper_link
    rng = np.random.default_rng(4)
    n_bits, n_frames = 90, 400
    msg = rng.integers(0, 2, n_bits * n_frames, dtype=np.uint8)
    msg_off = np.arange(n_frames + 1, dtype=np.int64) * n_bits
    tx, sym_off = link.transmit(msg, msg_off)
    n0 = link.cons.energy / 10 ** 2.0
    y = link.cons.points[tx] + np.sqrt(n0 / 2) * (rng.normal(size=tx.size) + 1j * rng.normal(size=tx.size))
    return link, msg, msg_off, tx, sym_off, y, n0


def test_log_i0_backends_agree():
    z = np.concatenate([np.linspace(0, 40, 400), np.geomspace(40, 1e6, 100)])
    np.testing.assert_allclose(kernels._log_i0_numpy(z, False, False),
                               kernels._log_i0_numba(z, False, False), rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(kernels._log_i0_numpy(z, True, True),
                               kernels._log_i0_numba(z, True, True), rtol=1e-14, atol=1e-15)


def test_map_demod_backends_agree(batch):
    link, _, _, _, _, y, n0 = batch
    args = (np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag),
            np.ascontiguousarray(link.cons.points.real), np.ascontiguousarray(link.cons.points.imag),
            link.log_prior, n0)
    i1, l1 = kernels._map_demod_numba(*args)
    i2, l2 = kernels._map_demod_numpy(*args)
    np.testing.assert_array_equal(i1, i2)
    np.testing.assert_allclose(l1, l2, rtol=1e-12, atol=1e-13)


def test_receive_backends_agree(batch):
    link, msg, msg_off, tx, sym_off, y, n0 = batch
    code = link.code
    args = (y, sym_off, link.cons.points, link.log_prior, n0, code.lengths, code.last_one,
            link.cand_ptr, link.cand_idx, 90)
    for correct in (True, False):
        a = kernels.receive_frames(*args, correct=correct, backend="numba")
        b = kernels.receive_frames(*args, correct=correct, backend="numpy")
        for x, z in zip(a, b):
            np.testing.assert_array_equal(x, z)
    status = a[2]
    assert np.any(status != kernels.LEN_OK)  # the batch exercises the search


def test_bit_error_backends_agree(batch):
    link, msg, msg_off, tx, sym_off, y, n0 = batch
    code = link.code
    _, sym, _, _ = kernels.receive_frames(y, sym_off, link.cons.points, link.log_prior, n0,
                                          code.lengths, code.last_one, link.cand_ptr,
                                          link.cand_idx, 90)
    args = (sym, sym_off, link.cw_bits, code.lengths, code.last_one, msg, msg_off)
    for x, z in zip(kernels._frame_bit_errors(*args), kernels._frame_bit_errors_numpy(*args)):
        np.testing.assert_array_equal(x, z)


def test_bit_errors_by_hand(fixture_cons, fixture_code):
    from omgrand.sim import OmLink

    link = OmLink(fixture_cons, fixture_code)
    msg = np.array([1, 1, 1, 0, 1, 1, 1], dtype=np.uint8)
    # [9, 4, 15] -> "10010111": prefix mismatches over 7 bits plus one extra bit
    errors, rx_len, erased = kernels.frame_bit_errors(
        np.array([9, 4, 15]), np.array([0, 3]), link.cw_bits, fixture_code.lengths,
        fixture_code.last_one, msg, np.array([0, 7]))
    expected = sum(a != b for a, b in zip("1001011", "1110111")) + 1
    assert errors[0] == expected and rx_len[0] == 8 and not erased[0]


def test_env_flag_selects_numpy_path():
    code = ("import omgrand, numpy as np\n"
            "from omgrand import kernels\n"
            "assert not omgrand.USE_NUMBA\n"
            "i, _ = kernels.map_demod(np.array([0.9+0j]), np.array([1+0j, -1+0j]), np.log([0.5, 0.5]), 0.1)\n"
            "assert i[0] == 0\n"
            "print('ok')\n")
    env = dict(os.environ, OMGRAND_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"


def test_numba_active_by_default():
    if os.environ.get("OMGRAND_DISABLE_JIT"):
        pytest.skip("jit disabled for this run")
    assert USE_NUMBA
