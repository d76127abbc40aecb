"""Huffman shaping with the "1 then 0s" padding terminator.

Uniform message bits walk the Huffman tree from the root and emit a symbol at
every leaf.  A frame is closed by following the 1-branch once and 0-branches
until a leaf, so the last 1 in the transmitted bit stream marks the end of
the message.  Bits are ``uint8`` arrays; strings of '0'/'1' are accepted
wherever bits go in.
"""
import heapq
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import DomainError


class NoTerminatorError(ValueError):
    """Received bit string carries no terminating 1."""


class AssignmentError(ValueError):
    pass


def as_bits(bits):
    if isinstance(bits, str):
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.asarray(bits, dtype=np.uint8)


def bitstring(bits):
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


class ShapingCode:
    """Prefix-free symbol <-> codeword map backed by a full binary tree.

    Node 0 is the root; ``children[v] = (zero_child, one_child)`` for internal
    nodes and ``(-1, -1)`` for leaves, ``symbol_of[v]`` is the leaf's symbol or
    -1.
    """

    def __init__(self, codewords, probs=None):
        self.codewords = [str(c) for c in codewords]
        if len(self.codewords) < 2:
            raise DomainError("a shaping code needs at least two symbols")
        self.lengths = np.array([len(c) for c in self.codewords], dtype=np.int64)
        self.probs = None if probs is None else np.asarray(probs, dtype=np.float64)
        self._build_tree()
        last_one = [c.rfind("1") for c in self.codewords]
        # index of the last 1 inside each codeword, -1 if all zeros
        self.last_one = np.array(last_one, dtype=np.int64)
        self._bit_table = [as_bits(c) for c in self.codewords]

    def _build_tree(self):
        children = [[-1, -1]]
        symbol_of = [-1]
        for sym, word in enumerate(self.codewords):
            if not word or set(word) - {"0", "1"}:
                raise DomainError(f"invalid codeword {word!r}")
            node = 0
            for ch in word:
                if symbol_of[node] >= 0:
                    raise DomainError("codewords are not prefix-free")
                b = int(ch)
                if children[node][b] < 0:
                    children[node][b] = len(children)
                    children.append([-1, -1])
                    symbol_of.append(-1)
                node = children[node][b]
            if symbol_of[node] >= 0 or children[node] != [-1, -1]:
                raise DomainError("codewords are not prefix-free")
            symbol_of[node] = sym
        self.children = np.array(children, dtype=np.int64)
        self.symbol_of = np.array(symbol_of, dtype=np.int64)
        internal = self.symbol_of < 0
        if np.any(self.children[internal] < 0):
            raise DomainError("code tree is not full (Kraft sum < 1)")

    def __len__(self):
        return len(self.codewords)

    @property
    def kraft_sum(self):
        from fractions import Fraction

        return sum(Fraction(1, 2 ** int(n)) for n in self.lengths)

    @property
    def mean_length(self):
        if self.probs is None:
            raise DomainError("code carries no symbol probabilities")
        return float(self.probs @ self.lengths)

    @property
    def max_length(self):
        return int(self.lengths.max())

    def bits_of(self, symbol):
        return self._bit_table[symbol]

    def internal_nodes(self):
        """Internal node ids with their depths, root first."""
        depth = np.zeros(len(self.symbol_of), dtype=np.int64)
        out = []
        stack = [0]
        while stack:
            v = stack.pop()
            if self.symbol_of[v] >= 0:
                continue
            out.append(v)
            for c in self.children[v]:
                depth[c] = depth[v] + 1
                stack.append(c)
        return np.array(out), depth

    def with_codewords(self, codewords):
        return ShapingCode(codewords, self.probs)


def build_code(probs):
    """Deterministic Huffman code.

    Subtrees are keyed by (probability, lowest contained symbol); the two
    smallest keys merge, the smaller taking the 0 branch.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size < 2:
        raise DomainError("need a vector of at least two probabilities")
    if np.any(~(probs > 0)):
        raise DomainError("probabilities must be strictly positive")
    heap = [(float(p), i, i) for i, p in enumerate(probs)]
    heapq.heapify(heap)
    tree = {}
    next_id = probs.size
    while len(heap) > 1:
        p0, m0, n0 = heapq.heappop(heap)
        p1, m1, n1 = heapq.heappop(heap)
        tree[next_id] = (n0, n1)
        heapq.heappush(heap, (p0 + p1, min(m0, m1), next_id))
        next_id += 1
    codewords = [""] * probs.size
    stack = [(heap[0][2], "")]
    while stack:
        node, prefix = stack.pop()
        if node < probs.size:
            codewords[node] = prefix
        else:
            zero, one = tree[node]
            stack.append((zero, prefix + "0"))
            stack.append((one, prefix + "1"))
    return ShapingCode(codewords, probs)


def _hamming(a, b):
    return sum(x != y for x, y in zip(a, b))


def assign_gray(code, cons):
    """Re-deal each length class of codewords along the constellation.

    Symbols of one codeword length are visited in (ring, angle) order; each
    takes the unused codeword of that length nearest in Hamming distance to
    its predecessor's (lexicographically smallest on ties, and for the first
    symbol).  Returns a new ``ShapingCode``.
    """
    if len(code) != len(cons):
        raise AssignmentError("code and constellation differ in size")
    expected = np.sort(build_code(cons.probs).lengths)
    if not np.array_equal(np.sort(code.lengths), expected):
        raise AssignmentError("codeword lengths do not match the Huffman lengths of the constellation")
    angle = np.mod(np.angle(cons.points), 2 * np.pi)
    new = list(code.codewords)
    for length in np.unique(code.lengths):
        members = np.flatnonzero(code.lengths == length)
        members = members[np.lexsort((angle[members], cons.ring_index[members]))]
        pool = sorted(code.codewords[i] for i in members)
        prev = None
        for sym in members:
            if prev is None:
                pick = pool[0]
            else:
                pick = min(pool, key=lambda w: (_hamming(w, prev), w))
            pool.remove(pick)
            new[sym] = pick
            prev = pick
    return code.with_codewords(new)


@dataclass
class PaddedFrame:
    message_bits: np.ndarray
    padded_bits: np.ndarray
    symbols: np.ndarray

    @property
    def pad_length(self):
        return self.padded_bits.size - self.message_bits.size


def modulate(bits, code):
    """Map message bits to symbols, closing the frame with the padding rule."""
    bits = as_bits(bits)
    symbols, _ = kernels.shape_frames(bits, np.array([0, bits.size]), code.children, code.symbol_of)
    return PaddedFrame(bits, symbols_to_bits(symbols, code), symbols)


def symbols_to_bits(symbols, code):
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if symbols.min() < 0 or symbols.max() >= len(code):
        raise DomainError("symbol index outside the code")
    return np.concatenate([code.bits_of(s) for s in symbols])


def depad(bits):
    """Strip the trailing zeros and the terminating 1."""
    bits = as_bits(bits)
    ones = np.flatnonzero(bits)
    if ones.size == 0:
        raise NoTerminatorError("no terminating 1 in received bits")
    return bits[: ones[-1]].copy()
