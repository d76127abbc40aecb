"""Uncoded 128-point cross QAM reference modem.

The cross is the 12x12 odd-integer grid minus the four 2x2 corner blocks.
Labels are 7 bits: the signs of the in-phase and quadrature coordinates
followed by a 5-bit label of the mirrored point inside its quadrant, so
neighbors straddling an axis differ only in a sign bit.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .channel import DomainError

BITS_PER_SYMBOL = 7

# Quadrant labels indexed [row][col] for |y| = 2*row + 1, |x| = 2*col + 1;
# -1 marks the removed corner.  Found by exhaustive search: 4 non-Gray
# horizontal/vertical pairs per quadrant is the minimum for a mirrored layout.
QUADRANT_LABELS = np.array([
    [0, 1, 3, 2, 4, 5],
    [8, 9, 11, 10, 6, 7],
    [12, 13, 15, 14, 22, 23],
    [28, 29, 31, 30, 20, 21],
    [24, 25, 27, 26, -1, -1],
    [16, 17, 19, 18, -1, -1],
])


def _cross_layout():
    coords, labels = [], []
    for y in range(-11, 12, 2):
        for x in range(-11, 12, 2):
            q = QUADRANT_LABELS[abs(y) // 2, abs(x) // 2]
            if q < 0:
                continue
            coords.append(x + 1j * y)
            labels.append((int(x < 0) << 6) | (int(y < 0) << 5) | int(q))
    return np.array(coords), np.array(labels, dtype=np.int64)


@dataclass
class QamGrid:
    """128-cross points with their 7-bit labels, scaled to mean energy ``es``."""

    es: float = 1.0

    def __post_init__(self):
        if not self.es > 0:
            raise DomainError("symbol energy must be positive")
        raw, labels = _cross_layout()
        self.scale = np.sqrt(self.es / np.mean(np.abs(raw) ** 2))
        # points[label] is the point carrying that label
        self.points = np.empty(128, dtype=np.complex128)
        self.points[labels] = raw * self.scale
        self.labels = np.arange(128)
        # cell lookup for the fast nearest-point rule: 12x12 grid -> label or -1
        self._cell = np.full((12, 12), -1, dtype=np.int64)
        self._cell[((raw.imag + 11) // 2).astype(int), ((raw.real + 11) // 2).astype(int)] = labels

    @property
    def min_distance(self):
        return 2.0 * self.scale

    def neighbor_pairs(self):
        """Horizontal/vertical nearest-neighbor label pairs ``(i, j)`` with ``i < j``."""
        pairs = []
        cell = self._cell
        for r in range(12):
            for c in range(12):
                if cell[r, c] < 0:
                    continue
                for rr, cc in ((r, c + 1), (r + 1, c)):
                    if rr < 12 and cc < 12 and cell[rr, cc] >= 0:
                        pairs.append(tuple(sorted((cell[r, c], cell[rr, cc]))))
        return np.array(pairs, dtype=np.int64)

    def eb_n0(self, n0):
        return self.es / (BITS_PER_SYMBOL * n0)

    def n0_for_eb_n0(self, eb_n0):
        return self.es / (BITS_PER_SYMBOL * eb_n0)


def _label_bits(labels):
    shifts = np.arange(BITS_PER_SYMBOL - 1, -1, -1)
    return ((np.asarray(labels)[:, None] >> shifts) & 1).astype(np.uint8)


def qam_modulate(bits, grid=None):
    grid = grid or QamGrid()
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size % BITS_PER_SYMBOL:
        raise DomainError(f"bit count {bits.size} is not a multiple of 7")
    weights = 1 << np.arange(BITS_PER_SYMBOL - 1, -1, -1)
    labels = bits.reshape(-1, BITS_PER_SYMBOL) @ weights
    return grid.points[labels]


def qam_decide(samples, grid=None):
    """Minimum-distance label per sample."""
    grid = grid or QamGrid()
    y = np.asarray(samples, dtype=np.complex128).ravel() / grid.scale
    col = np.clip(np.floor((y.real + 12) / 2), 0, 11).astype(np.int64)
    row = np.clip(np.floor((y.imag + 12) / 2), 0, 11).astype(np.int64)
    out = grid._cell[row, col]
    # samples landing in a removed corner: full search
    miss = np.flatnonzero(out < 0)
    if miss.size:
        d = np.abs(y[miss, None] * grid.scale - grid.points[None, :])
        out[miss] = np.argmin(d, axis=1)
    return out


def qam_demodulate(samples, n0, grid=None):
    if not n0 > 0:
        raise DomainError("n0 must be positive")
    return _label_bits(qam_decide(samples, grid)).ravel()


def _q(x):
    return 0.5 * erfc(x / np.sqrt(2.0))


def union_bound(eb_n0, grid=None):
    """Nearest-neighbor union-bound ``(ser, ber)`` at linear Eb/N0."""
    grid = grid or QamGrid()
    eb_n0 = np.asarray(eb_n0, dtype=np.float64)
    pairs = grid.neighbor_pairs()
    ham = np.array([bin(int(a) ^ int(b)).count("1") for a, b in pairs])
    n0 = grid.n0_for_eb_n0(eb_n0)
    # each pair is counted from both ends
    pe = _q(grid.min_distance / 2 / np.sqrt(n0 / 2))
    ser = 2 * len(pairs) / 128 * pe
    ber = 2 * ham.sum() / (128 * BITS_PER_SYMBOL) * pe
    return ser, ber
