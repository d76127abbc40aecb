"""Quantize a ring distribution into a finite constellation.

Ring sizes follow the cube-root rule ``k_a ~ (a^2 p(a))^(1/3)``; ring phases
are chosen greedily, outward, so each ring maximizes its minimum distance to
the ring just inside it.
"""
from dataclasses import dataclass, field

import numpy as np

from .channel import DomainError

ROTATION_STEPS = 360


class AllocationError(ValueError):
    pass


@dataclass(frozen=True)
class Ring:
    amplitude: float
    count: int
    phase_offset: float = 0.0

    def points(self, offset=None):
        off = self.phase_offset if offset is None else offset
        return self.amplitude * np.exp(1j * (off + 2 * np.pi * np.arange(self.count) / self.count))


@dataclass
class Constellation:
    points: np.ndarray
    probs: np.ndarray
    ring_index: np.ndarray
    rings: list
    peak_m: float
    n0: float
    avg_power: float = np.nan
    codewords: list = field(default=None)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.complex128)
        self.probs = np.asarray(self.probs, dtype=np.float64)
        self.ring_index = np.asarray(self.ring_index, dtype=np.int64)
        if abs(self.probs.sum() - 1.0) > 1e-9:
            raise DomainError("point probabilities must sum to 1")
        if np.any(np.abs(self.points) > self.peak_m + 1e-12):
            raise DomainError("point outside the peak amplitude")

    def __len__(self):
        return self.points.size

    @property
    def k(self):
        return self.points.size

    @property
    def energy(self):
        """Mean symbol energy ``sum p_i |x_i|^2``."""
        return float(self.probs @ np.abs(self.points) ** 2)

    @property
    def entropy_bits(self):
        p = self.probs[self.probs > 0]
        return float(-(p * np.log2(p)).sum())

    def ring_members(self, ring):
        return np.flatnonzero(self.ring_index == ring)


def allocate_points(dacp, k):
    """Number of constellation points per grid amplitude (sums to ``k``).

    Floors of the cube-root shares, one origin point for a populated zero
    amplitude, at least one point for every populated ring, and the leftover
    points to the largest fractional parts (lowest index on ties).
    """
    a = dacp.amplitudes
    p = dacp.probs
    live = p > 0
    if k < live.sum():
        raise AllocationError(f"{k} points cannot cover {live.sum()} populated rings")
    w = np.cbrt(a ** 2 * p)
    share = w / w.sum() * k if w.sum() > 0 else np.zeros_like(w)
    counts = np.floor(share).astype(np.int64)
    frac = share - counts
    origin = live & (a == 0)
    counts[origin] = 1
    frac[origin] = -np.inf
    counts[live & (counts == 0)] = 1
    counts[~live] = 0
    frac[~live] = -np.inf

    left = k - counts.sum()
    order = np.lexsort((np.arange(a.size), -frac))  # largest fraction first
    order = [i for i in order if np.isfinite(frac[i])]
    while left > 0:
        if not order:
            raise AllocationError("no ring can absorb the remaining points")
        for i in order[:left]:
            counts[i] += 1
        left = k - counts.sum()
    while left < 0:
        # forced minimum of one point overshot k: trim the rings with the
        # smallest fractional part among those that can spare one
        spare = [i for i in order[::-1] if counts[i] > 1]
        if not spare:
            raise AllocationError("cannot reduce allocation to k points")
        counts[spare[0]] -= 1
        left += 1
    return counts


def _min_distance(outer, inner_points, offsets):
    """Min distance between ``outer`` ring points at each offset and ``inner_points``."""
    base = 2 * np.pi * np.arange(outer.count) / outer.count
    pts = outer.amplitude * np.exp(1j * (offsets[:, None] + base[None, :]))
    d = np.abs(pts[:, :, None] - inner_points[None, None, :])
    return d.min(axis=(1, 2))


def rotate_rings(rings, steps=ROTATION_STEPS):
    """Greedy phase offsets for rings sorted by ascending amplitude.

    The innermost non-origin ring stays at offset 0; every later ring takes
    the grid offset in ``[0, 2 pi / count)`` with the largest minimum
    distance to the previous ring (smallest offset on ties).
    """
    offsets = []
    prev = None
    for ring in rings:
        if ring.amplitude == 0:
            offsets.append(0.0)
            continue
        off = 0.0
        if prev is not None:
            cand = np.arange(steps) * (2 * np.pi / ring.count) / steps
            dist = _min_distance(ring, prev, cand)
            best = dist.max()
            off = float(cand[np.flatnonzero(dist >= best - 1e-12 * max(1.0, best))[0]])
        offsets.append(off)
        prev = ring.points(off)
    return offsets


def build_constellation(dacp, k, n0=np.nan):
    counts = allocate_points(dacp, k)
    amps = dacp.amplitudes
    live = np.flatnonzero(counts > 0)
    rings = [Ring(float(amps[i]), int(counts[i])) for i in live]
    offsets = rotate_rings(rings)
    rings = [Ring(r.amplitude, r.count, o) for r, o in zip(rings, offsets)]
    points, probs, ring_idx = [], [], []
    for j, (i, ring) in enumerate(zip(live, rings)):
        points.append(ring.points())
        probs.append(np.full(ring.count, dacp.probs[i] / ring.count))
        ring_idx.append(np.full(ring.count, j))
    return Constellation(
        points=np.concatenate(points),
        probs=np.concatenate(probs),
        ring_index=np.concatenate(ring_idx),
        rings=rings,
        peak_m=float(dacp.grid.peak),
        n0=float(n0),
        avg_power=float(dacp.avg_power),
    )
