import numpy as np
import pytest

from conftest import fixture_constellation
from omgrand.constellation import build_constellation
from omgrand.formats import (FormatError, read_constellation, read_dacp, write_constellation,
                             write_dacp)


def test_dacp_roundtrip(paper_design, tmp_path):
    dist, trace = paper_design
    path = tmp_path / "d.txt"
    write_dacp(path, dist, 0.01, {"model": "amplitude", "converged": "true"})
    back, n0, meta = read_dacp(path)
    assert n0 == 0.01
    assert meta == {"model": "amplitude", "converged": "true"}
    np.testing.assert_array_equal(back.amplitudes, dist.amplitudes)
    np.testing.assert_array_equal(back.probs, dist.probs)
    assert back.avg_power == dist.avg_power


def test_constellation_roundtrip(paper_design, tmp_path):
    dist, _ = paper_design
    cons = build_constellation(dist, 128, n0=0.01)
    path = tmp_path / "c.txt"
    write_constellation(path, cons, {"model": "amplitude"})
    back, meta = read_constellation(path)
    assert meta["model"] == "amplitude"
    assert back.codewords is None
    np.testing.assert_array_equal(back.points, cons.points)
    np.testing.assert_array_equal(back.probs, cons.probs)
    np.testing.assert_array_equal(back.ring_index, cons.ring_index)
    for a, b in zip(back.rings, cons.rings):
        assert a.count == b.count
        assert a.amplitude == pytest.approx(b.amplitude, rel=1e-12, abs=1e-15)
    assert len(path.read_text().splitlines()) == 128 + 5


def test_codeword_column(tmp_path, fixture_cons):
    from conftest import fixture_codewords

    fixture_cons.codewords = fixture_codewords()
    path = tmp_path / "c.txt"
    write_constellation(path, fixture_cons)
    back, _ = read_constellation(path)
    assert back.codewords == fixture_codewords()
    np.testing.assert_allclose(back.points, fixture_cons.points, rtol=0, atol=1e-15)


def test_values_keep_full_precision(tmp_path):
    cons = fixture_constellation()
    cons.probs = cons.probs * (1 + 1e-13)
    path = tmp_path / "c.txt"
    write_constellation(path, cons)
    back, _ = read_constellation(path)
    # 17 significant digits: exact float roundtrip
    np.testing.assert_array_equal(back.probs, cons.probs)


def _write(path, text):
    path.write_text(text)
    return path


@pytest.mark.parametrize("text", [
    "avg_power=4\npeak=0.6\n0 0.5\n0.6 0.5\n",  # no n0
    "n0=0.01\navg_power=4\npeak=0.6\n",  # no rows
    "n0=0.01\navg_power=4\npeak=0.6\n0 0.5 1\n0.6 0.5\n",  # ragged
    "n0=0.01\navg_power=4\npeak=1.2\n0 0.5\n0.6 0.5\n",  # wrong peak
])
def test_bad_dacp(tmp_path, text):
    with pytest.raises(FormatError):
        read_dacp(_write(tmp_path / "d.txt", text))


@pytest.mark.parametrize("text", [
    "k=3\nn0=0.01\navg_power=4\npeak=1\n0 0 0 0.5 0\n1 1 0 0.5 1\n",  # short
    "k=2\nn0=0.01\navg_power=4\npeak=1\n0 0 0 0.5 0\n1 1 0 0.5 1 0 1\n",  # ragged
    "k=2\nn0=0.01\navg_power=4\npeak=1\n1 0 0 0.5 0\n0 1 0 0.5 1\n",  # order
    "k=2\nn0=0.01\npeak=1\n0 0 0 0.5 0\n1 1 0 0.5 1\n",  # no avg_power
])
def test_bad_constellation(tmp_path, text):
    with pytest.raises(FormatError):
        read_constellation(_write(tmp_path / "c.txt", text))


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_dacp(tmp_path / "absent.txt")
