#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--symbols N]

Both paths are called directly so one process measures both; setting
OMGRAND_DISABLE_JIT=1 makes the package use the numpy path everywhere.
"""
import argparse
import time

import numpy as np

from omgrand import kernels
from omgrand.channel import ChannelParams
from omgrand.constellation import build_constellation
from omgrand.dacp import AmplitudeGrid, design_dacp
from omgrand.shaping import assign_gray, build_code
from omgrand.sim import OmLink


def best_of(fn, repeat=3):
    fn()  # warm-up (triggers compilation)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--symbols", type=int, default=200_000)
    ap.add_argument("--es-n0-db", type=float, default=22.0)
    args = ap.parse_args()

    grid = AmplitudeGrid.uniform(0.6, 11)
    dist, _ = design_dacp(grid, ChannelParams(0.01, 6.0, 4.0), tol=1e-3, model="complex")
    cons = build_constellation(dist, 128, n0=0.01)
    code = assign_gray(build_code(cons.probs), cons)
    link = OmLink(cons, code)
    n0 = cons.energy / 10 ** (args.es_n0_db / 10)

    rng = np.random.default_rng(1)
    n_bits = 120
    n_frames = max(1, int(args.symbols * code.mean_length) // n_bits)
    msg = rng.integers(0, 2, n_frames * n_bits, dtype=np.uint8)
    msg_off = np.arange(n_frames + 1, dtype=np.int64) * n_bits
    tx, sym_off = link.transmit(msg, msg_off)
    y = cons.points[tx] + np.sqrt(n0 / 2) * (rng.standard_normal(tx.size) + 1j * rng.standard_normal(tx.size))
    yr, yi = np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag)
    pr, pi = np.ascontiguousarray(cons.points.real), np.ascontiguousarray(cons.points.imag)
    z = rng.uniform(0, 200, args.symbols)

    rx_args = (y, sym_off, cons.points, link.log_prior, n0, code.lengths, code.last_one,
               link.cand_ptr, link.cand_idx, n_bits)
    _, sym, _, _ = kernels.receive_frames(*rx_args)
    err_args = tuple(np.ascontiguousarray(a) for a in (
        sym, sym_off, link.cw_bits, code.lengths, code.last_one, msg, msg_off))

    cases = [
        ("log_i0", lambda: kernels._log_i0_numba(z, False, False),
         lambda: kernels._log_i0_numpy(z, False, False)),
        ("map_demod", lambda: kernels._map_demod_numba(yr, yi, pr, pi, link.log_prior, n0),
         lambda: kernels._map_demod_numpy(yr, yi, pr, pi, link.log_prior, n0)),
        ("receive_frames", lambda: kernels.receive_frames(*rx_args, backend="numba"),
         lambda: kernels.receive_frames(*rx_args, backend="numpy")),
        ("frame_bit_errors", lambda: kernels._frame_bit_errors(*err_args),
         lambda: kernels._frame_bit_errors_numpy(*err_args)),
    ]
    print(f"{tx.size} symbols in {n_frames} frames, Es/N0 {args.es_n0_db} dB")
    print(f"{'kernel':<18} {'numba (ms)':>11} {'numpy (ms)':>11} {'speedup':>8}")
    for name, fast, slow in cases:
        t_fast, t_slow = best_of(fast), best_of(slow)
        print(f"{name:<18} {1e3 * t_fast:11.2f} {1e3 * t_slow:11.2f} {t_slow / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
