"""MAP demodulation and single-symbol length correction.

The receiver knows the message length.  After MAP decisions and depadding, a
frame of the wrong length is repaired by trying, from the least reliable
position onward, the same-ring and adjacent-ring alternatives of that symbol
in order of their likelihood, and accepting the first swap that restores the
length.
"""
from dataclasses import dataclass
import numpy as np
from scipy.special import logsumexp

from . import kernels
from .shaping import NoTerminatorError, depad, symbols_to_bits


@dataclass
class DemodResult:
    symbols: np.ndarray
    posteriors: np.ndarray
    bits: np.ndarray = None
    erasure: bool = False
    fallback_used: bool = False
    corrected_position: int = -1

    @property
    def log_posteriors(self):
        return np.log(self.posteriors)


def _log_prior(cons):
    return np.log(cons.probs)


def posterior_matrix(samples, cons, n0):
    """Full posterior over all points for every sample (rows sum to one)."""
    y = np.asarray(samples, dtype=np.complex128).ravel()
    m = _log_prior(cons)[None, :] - np.abs(y[:, None] - cons.points[None, :]) ** 2 / n0
    return np.exp(m - logsumexp(m, axis=1, keepdims=True))


def _depadded_or_none(symbols, code):
    try:
        return depad(symbols_to_bits(symbols, code))
    except NoTerminatorError:
        return None


def map_demod(samples, cons, n0, code=None):
    """Per-sample ``argmax_x p(x) exp(-|y - x|^2 / n0)`` (lowest index on ties)."""
    if not n0 > 0:
        raise ValueError("n0 must be positive")
    idx, lpost = kernels.map_demod(samples, cons.points, _log_prior(cons), n0)
    res = DemodResult(idx, np.exp(lpost))
    if code is not None:
        res.bits = _depadded_or_none(idx, code)
        res.erasure = res.bits is None
    return res


def candidate_set(symbol, cons):
    """Points on the symbol's ring and on the occupied rings just inside and outside it."""
    ptr, flat = candidate_csr(cons)
    return flat[ptr[symbol]:ptr[symbol + 1]]


def candidate_csr(cons):
    """Candidate sets of every symbol in CSR form ``(ptr, indices)``, cached on ``cons``."""
    cached = getattr(cons, "_candidates", None)
    if cached is not None:
        return cached
    rings = cons.ring_index
    lists = []
    for s in range(len(cons)):
        near = np.flatnonzero(np.abs(rings - rings[s]) <= 1)
        lists.append(near[near != s])
    ptr = np.zeros(len(cons) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([x.size for x in lists])
    cons._candidates = (ptr, np.concatenate(lists).astype(np.int64))
    return cons._candidates


def last_symbol_fallback(demod, cons, samples, n0, code):
    """Replace an all-zero final codeword by the runner-up point of the last sample."""
    if demod.symbols.size == 0 or code.last_one[demod.symbols[-1]] >= 0:
        return demod
    y = np.asarray(samples, dtype=np.complex128).ravel()[-1]
    m = _log_prior(cons) - np.abs(y - cons.points) ** 2 / n0
    first = demod.symbols[-1]
    m_first = m[first]
    m[first] = -np.inf
    alt = int(np.argmax(m))
    symbols = demod.symbols.copy()
    symbols[-1] = alt
    post = demod.posteriors.copy()
    post[-1] *= np.exp(m[alt] - m_first)
    bits = _depadded_or_none(symbols, code)
    return DemodResult(symbols, post, bits, bits is None, True, demod.corrected_position)


def length_correct(samples, demod, n, cons, code, n0):
    """Restore the message length ``n`` by changing at most one symbol.

    Returns the depadded message bits; an unrecoverable frame (no terminator
    anywhere) yields an empty array with ``demod.erasure`` set.
    """
    return correct_frame(samples, demod, n, cons, code, n0).bits


def correct_frame(samples, demod, n, cons, code, n0):
    """Like ``length_correct`` but returns the updated ``DemodResult``."""
    y = np.asarray(samples, dtype=np.complex128).ravel()
    ptr, flat = candidate_csr(cons)
    sym = demod.symbols.astype(np.int64).copy()
    status, pos = kernels._correct_frame(
        sym, np.log(demod.posteriors), np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag),
        np.ascontiguousarray(cons.points.real), np.ascontiguousarray(cons.points.imag),
        _log_prior(cons), float(n0), code.lengths, code.last_one, ptr, flat, int(n),
    )
    bits = _depadded_or_none(sym, code)
    out = DemodResult(sym, demod.posteriors.copy(), bits, bits is None, demod.fallback_used, pos)
    if bits is None:
        out.bits = np.zeros(0, dtype=np.uint8)
    demod.erasure = out.erasure
    return out


def receive(samples, cons, code, n0, n, correct=True):
    """MAP decisions, last-symbol fallback and (optionally) length correction."""
    demod = map_demod(samples, cons, n0, code)
    demod = last_symbol_fallback(demod, cons, samples, n0, code)
    if not correct:
        if demod.bits is None:
            demod.bits = np.zeros(0, dtype=np.uint8)
        return demod
    return correct_frame(samples, demod, n, cons, code, n0)
