"""Hot numeric kernels.

Each kernel has a numba implementation and a numpy (or plain Python) fallback
with identical semantics; the public wrappers at the bottom of each section
dispatch on ``USE_NUMBA``.  Inputs are always normalized to contiguous numpy
arrays before they reach a compiled kernel.
"""
import math

import numpy as np

from ._jit import USE_NUMBA, njit

#: below this argument ln I0 is summed from the power series, above it the
#: large-argument expansion is used
BESSEL_CROSSOVER = 30.0
_SERIES_TERMS = 120
_ASYMPTOTIC_TERMS = 14
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


# --------------------------------------------------------------------------
# ln I0
# --------------------------------------------------------------------------

@njit(cache=True)
def _log_i0_scalar(z, leading_order, scaled):
    if z < BESSEL_CROSSOVER:
        q = 0.25 * z * z
        term = 1.0
        total = 1.0
        for k in range(1, _SERIES_TERMS):
            term *= q / (k * k)
            total += term
            if term < 1e-17 * total:
                break
        if scaled:
            return math.log(total) - z
        return math.log(total)
    base = -0.5 * math.log(z) - _HALF_LOG_2PI
    if not scaled:
        base += z
    if leading_order:
        return base
    c = 1.0
    corr = 0.0
    for k in range(1, _ASYMPTOTIC_TERMS):
        c *= (2 * k - 1) ** 2 / (8.0 * z * k)
        corr += c
    return base + math.log1p(corr)


@njit(cache=True)
def _log_i0_numba(z, leading_order, scaled):
    out = np.empty(z.size)
    for i in range(z.size):
        out[i] = _log_i0_scalar(z[i], leading_order, scaled)
    return out


def _log_i0_numpy(z, leading_order, scaled):
    out = np.empty_like(z)
    small = z < BESSEL_CROSSOVER
    zs = z[small]
    if zs.size:
        q = 0.25 * zs * zs
        term = np.ones_like(zs)
        total = np.ones_like(zs)
        for k in range(1, _SERIES_TERMS):
            term = term * q / (k * k)
            total += term
            if np.all(term < 1e-17 * total):
                break
        out[small] = np.log(total) - zs if scaled else np.log(total)
    zl = z[~small]
    if zl.size:
        base = -0.5 * np.log(zl) - _HALF_LOG_2PI
        if not scaled:
            base = base + zl
        if not leading_order:
            c = np.ones_like(zl)
            corr = np.zeros_like(zl)
            for k in range(1, _ASYMPTOTIC_TERMS):
                c = c * (2 * k - 1) ** 2 / (8.0 * zl * k)
                corr += c
            base = base + np.log1p(corr)
        out[~small] = base
    return out


def log_i0(z, leading_order=False, scaled=False):
    """Elementwise ln I0 on a float array (no validation).

    ``scaled=True`` returns ln I0(z) - z, which stays accurate for huge z.
    """
    z = np.asarray(z, dtype=np.float64)
    flat = np.ascontiguousarray(z.ravel())
    if USE_NUMBA:
        out = _log_i0_numba(flat, leading_order, scaled)
    else:
        out = _log_i0_numpy(flat, leading_order, scaled)
    return out.reshape(z.shape)


# --------------------------------------------------------------------------
# Huffman shaping: bits -> symbols with "1 then 0s" padding, batched
# --------------------------------------------------------------------------

@njit(cache=True)
def _shape_frames(bits, offsets, children, symbol_of):
    n_frames = offsets.size - 1
    out = np.empty(bits.size + n_frames, dtype=np.int64)
    out_off = np.zeros(n_frames + 1, dtype=np.int64)
    pos = 0
    for f in range(n_frames):
        node = 0
        for i in range(offsets[f], offsets[f + 1]):
            node = children[node, bits[i]]
            if symbol_of[node] >= 0:
                out[pos] = symbol_of[node]
                pos += 1
                node = 0
        node = children[node, 1]
        while symbol_of[node] < 0:
            node = children[node, 0]
        out[pos] = symbol_of[node]
        pos += 1
        out_off[f + 1] = pos
    return out[:pos], out_off


def shape_frames(bits, offsets, children, symbol_of):
    """Huffman-shape a batch of frames held CSR-style in ``bits``/``offsets``.

    Returns ``(symbols, symbol_offsets)``.  Without numba the identical loop
    runs interpreted; the walk is inherently sequential.
    """
    return _shape_frames(
        np.ascontiguousarray(bits, dtype=np.uint8),
        np.ascontiguousarray(offsets, dtype=np.int64),
        np.ascontiguousarray(children, dtype=np.int64),
        np.ascontiguousarray(symbol_of, dtype=np.int64),
    )


# --------------------------------------------------------------------------
# MAP demodulation
# --------------------------------------------------------------------------

@njit(cache=True)
def _map_demod_numba(yr, yi, pr, pi, log_prior, n0):
    n = yr.size
    k = pr.size
    inv = 1.0 / n0
    idx = np.empty(n, dtype=np.int64)
    lpost = np.empty(n)
    m = np.empty(k)
    for s in range(n):
        best = -np.inf
        bi = 0
        for j in range(k):
            dr = yr[s] - pr[j]
            di = yi[s] - pi[j]
            m[j] = log_prior[j] - (dr * dr + di * di) * inv
            if m[j] > best:
                best = m[j]
                bi = j
        tot = 0.0
        for j in range(k):
            d = m[j] - best
            # terms below exp(-50) cannot move a sum that is at least 1
            if d > -50.0:
                tot += math.exp(d)
        idx[s] = bi
        lpost[s] = -math.log(tot)
    return idx, lpost


def _map_demod_numpy(yr, yi, pr, pi, log_prior, n0, chunk=4096):
    n = yr.size
    idx = np.empty(n, dtype=np.int64)
    lpost = np.empty(n)
    for start in range(0, n, chunk):
        sl = slice(start, start + chunk)
        m = log_prior[None, :] - ((yr[sl, None] - pr[None, :]) ** 2 + (yi[sl, None] - pi[None, :]) ** 2) * (1.0 / n0)
        best = m.argmax(axis=1)
        top = m[np.arange(best.size), best]
        idx[sl] = best
        lpost[sl] = -np.log(np.exp(m - top[:, None]).sum(axis=1))
    return idx, lpost


def map_demod(y, points, log_prior, n0):
    """Per-sample MAP index and log posterior of the chosen point."""
    y = np.asarray(y, dtype=np.complex128).ravel()
    pts = np.asarray(points, dtype=np.complex128)
    args = (
        np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag),
        np.ascontiguousarray(pts.real), np.ascontiguousarray(pts.imag),
        np.ascontiguousarray(log_prior, dtype=np.float64), float(n0),
    )
    if USE_NUMBA:
        return _map_demod_numba(*args)
    return _map_demod_numpy(*args)


# --------------------------------------------------------------------------
# Receiver: last-symbol fallback + single-symbol length correction
# --------------------------------------------------------------------------
# Status codes reported per frame.
LEN_OK = 0
LEN_CORRECTED = 1
LEN_EXHAUSTED = 2


@njit(cache=True)
def _metric(yr, yi, pr, pi, log_prior, n0, j):
    dr = yr - pr[j]
    di = yi - pi[j]
    return log_prior[j] - (dr * dr + di * di) / n0


@njit(cache=True)
def _second_best(yr, yi, pr, pi, log_prior, n0, first):
    best = -np.inf
    bi = -1
    for j in range(pr.size):
        if j == first:
            continue
        m = _metric(yr, yi, pr, pi, log_prior, n0, j)
        if m > best:
            best = m
            bi = j
    return bi, best


@njit(cache=True)
def _depad_length(sym, lengths, last_one):
    """Length of the message left after depadding, -1 if no terminator."""
    total = 0
    for i in range(sym.size):
        total += lengths[sym[i]]
    for i in range(sym.size - 1, -1, -1):
        total -= lengths[sym[i]]
        if last_one[sym[i]] >= 0:
            return total + last_one[sym[i]]
    return -1


@njit(cache=True)
def _correct_frame(sym, lpost, yr, yi, pr, pi, log_prior, n0, lengths, last_one,
                   cand_ptr, cand_idx, target):
    """Swap at most one symbol so the depadded length equals ``target``.

    Modifies ``sym`` in place.  Returns ``(status, position)``.
    """
    n = sym.size
    dl = _depad_length(sym, lengths, last_one)
    if dl == target:
        return LEN_OK, -1
    prefix = np.empty(n + 1, dtype=np.int64)
    prefix[0] = 0
    for i in range(n):
        prefix[i + 1] = prefix[i] + lengths[sym[i]]
    # prev_term[i]: depadded length if the terminator lies strictly before i
    prev_term = np.empty(n, dtype=np.int64)
    cur = -1
    for i in range(n):
        prev_term[i] = cur
        if last_one[sym[i]] >= 0:
            cur = prefix[i] + last_one[sym[i]]
    last_term = -1
    for i in range(n - 1, -1, -1):
        if last_one[sym[i]] >= 0:
            last_term = i
            break

    order = np.argsort(lpost, kind="mergesort")
    for oi in range(n):
        i = order[oi]
        s = sym[i]
        lo = cand_ptr[s]
        hi = cand_ptr[s + 1]
        m = hi - lo
        if m == 0:
            continue
        scores = np.empty(m)
        for c in range(m):
            scores[c] = -_metric(yr[i], yi[i], pr, pi, log_prior, n0, cand_idx[lo + c])
        corder = np.argsort(scores, kind="mergesort")
        for c in range(m):
            alt = cand_idx[lo + corder[c]]
            if last_term > i:
                new_dl = dl + lengths[alt] - lengths[s]
            elif last_one[alt] >= 0:
                new_dl = prefix[i] + last_one[alt]
            else:
                new_dl = prev_term[i]
            if new_dl == target:
                sym[i] = alt
                return LEN_CORRECTED, i
    return LEN_EXHAUSTED, -1


@njit(cache=True)
def _receive_numba(yr, yi, frame_off, pr, pi, log_prior, n0, lengths, last_one,
                   cand_ptr, cand_idx, target, correct):
    sym, lpost = _map_demod_numba(yr, yi, pr, pi, log_prior, n0)
    n_frames = frame_off.size - 1
    raw = sym.copy()
    status = np.zeros(n_frames, dtype=np.int64)
    fallback = np.zeros(n_frames, dtype=np.bool_)
    for f in range(n_frames):
        a = frame_off[f]
        b = frame_off[f + 1]
        if b == a:
            continue
        last = b - 1
        if last_one[sym[last]] < 0:
            alt, m = _second_best(yr[last], yi[last], pr, pi, log_prior, n0, sym[last])
            sym[last] = alt
            lpost[last] = m - _metric(yr[last], yi[last], pr, pi, log_prior, n0, raw[last]) + lpost[last]
            fallback[f] = True
        if correct:
            st, _ = _correct_frame(sym[a:b], lpost[a:b], yr[a:b], yi[a:b], pr, pi, log_prior, n0,
                                   lengths, last_one, cand_ptr, cand_idx, target)
            status[f] = st
        else:
            status[f] = LEN_OK if _depad_length(sym[a:b], lengths, last_one) == target else LEN_EXHAUSTED
    return raw, sym, status, fallback


def _receive_python(yr, yi, frame_off, pr, pi, log_prior, n0, lengths, last_one,
                    cand_ptr, cand_idx, target, correct):
    """numpy fallback: vectorized demodulation, per-frame search in Python."""
    raw, lpost = _map_demod_numpy(yr, yi, pr, pi, log_prior, n0)
    sym = raw.copy()
    n_frames = frame_off.size - 1
    status = np.zeros(n_frames, dtype=np.int64)
    fallback = np.zeros(n_frames, dtype=bool)
    ends = frame_off[1:][np.diff(frame_off) > 0] - 1
    bad = ends[last_one[sym[ends]] < 0]
    for last in bad:
        m = log_prior - ((yr[last] - pr) ** 2 + (yi[last] - pi) ** 2) / n0
        first = sym[last]
        m_first = m[first]
        m[first] = -np.inf
        alt = int(np.argmax(m))
        sym[last] = alt
        lpost[last] += m[alt] - m_first
        fallback[np.searchsorted(frame_off, last, side="right") - 1] = True
    # vectorized depadded length per frame
    seg_len = lengths[sym]
    csum = np.concatenate([[0], np.cumsum(seg_len)])
    for f in range(n_frames):
        a, b = frame_off[f], frame_off[f + 1]
        if b == a:
            continue
        fs = sym[a:b]
        lo = last_one[fs]
        hits = np.flatnonzero(lo >= 0)
        dl = -1 if hits.size == 0 else csum[a + hits[-1]] - csum[a] + lo[hits[-1]]
        if dl == target:
            status[f] = LEN_OK
        elif not correct:
            status[f] = LEN_EXHAUSTED
        else:
            st, _ = _correct_frame_python(fs, lpost[a:b], yr[a:b], yi[a:b], pr, pi, log_prior, n0,
                                          lengths, last_one, cand_ptr, cand_idx, target)
            status[f] = st
    return raw, sym, status, fallback


def _correct_frame_python(sym, lpost, yr, yi, pr, pi, log_prior, n0, lengths, last_one,
                          cand_ptr, cand_idx, target):
    # rarely hit (only frames with a length error); reuse the scalar routine
    # uncompiled so both paths share the search order exactly
    func = getattr(_correct_frame, "py_func", _correct_frame)
    return func(sym, lpost, yr, yi, pr, pi, log_prior, n0, lengths, last_one,
                cand_ptr, cand_idx, target)


def receive_frames(y, frame_off, points, log_prior, n0, lengths, last_one,
                   cand_ptr, cand_idx, target, correct=True, backend=None):
    """Demodulate a batch of frames and repair single length errors.

    Returns ``(raw_symbols, symbols, status, fallback_used)``; ``symbols`` has
    the same CSR layout as the input samples.
    """
    y = np.asarray(y, dtype=np.complex128)
    pts = np.asarray(points, dtype=np.complex128)
    args = (
        np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag),
        np.ascontiguousarray(frame_off, dtype=np.int64),
        np.ascontiguousarray(pts.real), np.ascontiguousarray(pts.imag),
        np.ascontiguousarray(log_prior, dtype=np.float64), float(n0),
        np.ascontiguousarray(lengths, dtype=np.int64),
        np.ascontiguousarray(last_one, dtype=np.int64),
        np.ascontiguousarray(cand_ptr, dtype=np.int64),
        np.ascontiguousarray(cand_idx, dtype=np.int64),
        int(target), bool(correct),
    )
    backend = backend or ("numba" if USE_NUMBA else "numpy")
    if backend == "numba":
        return _receive_numba(*args)
    return _receive_python(*args)


# --------------------------------------------------------------------------
# Bit error accounting
# --------------------------------------------------------------------------

@njit(cache=True)
def _frame_bit_errors(sym, sym_off, cw_bits, lengths, last_one, msg, msg_off):
    """Per frame: (bit errors, recovered length, erasure flag)."""
    n_frames = sym_off.size - 1
    errors = np.zeros(n_frames, dtype=np.int64)
    rx_len = np.zeros(n_frames, dtype=np.int64)
    erased = np.zeros(n_frames, dtype=np.bool_)
    for f in range(n_frames):
        fs = sym[sym_off[f]:sym_off[f + 1]]
        dl = _depad_length(fs, lengths, last_one)
        n_msg = msg_off[f + 1] - msg_off[f]
        if dl < 0:
            erased[f] = True
            errors[f] = n_msg
            continue
        rx_len[f] = dl
        pos = 0
        err = 0
        common = min(dl, n_msg)
        for s in fs:
            for t in range(lengths[s]):
                if pos >= common:
                    break
                if cw_bits[s, t] != msg[msg_off[f] + pos]:
                    err += 1
                pos += 1
            if pos >= common:
                break
        errors[f] = err + abs(dl - n_msg)
    return errors, rx_len, erased


def _frame_bit_errors_numpy(sym, sym_off, cw_bits, lengths, last_one, msg, msg_off):
    n_frames = sym_off.size - 1
    seg = lengths[sym]
    csum = np.concatenate([[0], np.cumsum(seg)])
    # depadded length: position of the last 1 in each frame's bit stream
    has_one = last_one[sym] >= 0
    term_pos = np.where(has_one, csum[:-1] + last_one[sym], -1)
    frame_id = np.repeat(np.arange(n_frames), np.diff(sym_off))
    last_term = np.full(n_frames, -1, dtype=np.int64)
    np.maximum.at(last_term, frame_id, term_pos)
    start = csum[sym_off[:-1]]
    erased = last_term < 0
    rx_len = np.where(erased, 0, last_term - start)
    n_msg = np.diff(msg_off)
    common = np.where(erased, 0, np.minimum(rx_len, n_msg))

    width = cw_bits.shape[1]
    mask = np.arange(width)[None, :] < seg[:, None]
    rx_bits = cw_bits[sym][mask]
    rel = np.arange(common.sum()) - np.repeat(np.cumsum(common) - common, common)
    fid = np.repeat(np.arange(n_frames), common)
    mism = rx_bits[start[fid] + rel] != msg[msg_off[:-1][fid] + rel]
    errors = np.bincount(fid, weights=mism, minlength=n_frames).astype(np.int64)
    errors += np.abs(rx_len - n_msg)
    errors[erased] = n_msg[erased]
    return errors, rx_len, erased


def frame_bit_errors(sym, sym_off, cw_bits, lengths, last_one, msg, msg_off):
    """Bit errors of each recovered frame against its message.

    Mismatches over the common prefix plus the length difference; an erased
    frame (no terminator) counts every message bit.  Returns ``(errors,
    recovered_length, erased)``.
    """
    args = (
        np.ascontiguousarray(sym, dtype=np.int64), np.ascontiguousarray(sym_off, dtype=np.int64),
        np.ascontiguousarray(cw_bits, dtype=np.uint8), np.ascontiguousarray(lengths, dtype=np.int64),
        np.ascontiguousarray(last_one, dtype=np.int64), np.ascontiguousarray(msg, dtype=np.uint8),
        np.ascontiguousarray(msg_off, dtype=np.int64),
    )
    if USE_NUMBA:
        return _frame_bit_errors(*args)
    return _frame_bit_errors_numpy(*args)
