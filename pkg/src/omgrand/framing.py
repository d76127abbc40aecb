"""Message-length planning, padding overhead and Eb/N0 accounting.

Length-changing symbol errors are modeled as independent per symbol with
probability ``p_indel``.  The number of symbols per message is the largest
``N`` for which two or more such errors in one frame are no more likely than
``a * p_indel``.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import DomainError, add_noise, ChannelParams
from . import kernels

NS_CAP = 10 ** 6
DEFAULT_A_GRID = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)


@dataclass
class IndelEstimate:
    p: float
    stderr: float
    trials: int
    events: int
    censored: bool = False

    def __float__(self):
        return self.p


@dataclass
class FramePlan:
    es_n0: float
    p_indel: float
    a_param: float
    n_symbols: int
    n_bits: int
    rate: float
    eb_n0: float = np.nan
    floored: bool = False

    @property
    def es_n0_db(self):
        return 10 * np.log10(self.es_n0)

    @property
    def eb_n0_db(self):
        return 10 * np.log10(self.eb_n0)


def db(x):
    return 10.0 * np.log10(x)


def undb(x):
    return 10.0 ** (np.asarray(x, dtype=np.float64) / 10.0)


def n0_for(cons, es_n0):
    """Noise density giving the requested Es/N0 for this constellation's energy."""
    return cons.energy / es_n0


def estimate_p_indel(cons, code, es_n0, trials=10 ** 5, rng=None, batch=1 << 16):
    """Monte Carlo probability that a MAP decision changes the codeword length."""
    if trials < 10 ** 4:
        raise DomainError("need at least 10^4 trials")
    if np.all(code.lengths == code.lengths[0]):
        # no decision can change a codeword length
        return IndelEstimate(0.0, 0.0, int(trials), 0)
    rng = np.random.default_rng(rng)
    n0 = n0_for(cons, es_n0)
    params = ChannelParams(n0, max(cons.peak_m, 1e-9), min(cons.energy, cons.peak_m ** 2))
    log_prior = np.log(cons.probs)
    events = 0
    done = 0
    cdf = np.cumsum(cons.probs)
    while done < trials:
        m = min(batch, trials - done)
        tx = np.minimum(np.searchsorted(cdf, rng.random(m) * cdf[-1], side="right"), len(cons) - 1)
        y = add_noise(cons.points[tx], params, rng)
        rx, _ = kernels.map_demod(y, cons.points, log_prior, n0)
        events += int(np.count_nonzero(code.lengths[rx] != code.lengths[tx]))
        done += m
    if events == 0:
        # one-sided 95% bound for zero observed events
        return IndelEstimate(3.0 / trials, 0.0, trials, 0, censored=True)
    p = events / trials
    return IndelEstimate(p, np.sqrt(p * (1 - p) / trials), trials, events)


def prob_two_or_more(n, p):
    """P(at least two indels among ``n`` independent symbols)."""
    n = np.asarray(n, dtype=np.float64)
    log_q = np.log1p(-p)
    # 1 - (1-p)^n via expm1 keeps precision when the answer is tiny
    out = -np.expm1(n * log_q) - n * p * np.exp((n - 1) * log_q)
    return np.maximum(out, 0.0)


def select_ns(p_indel, a_param, cap=NS_CAP):
    """Largest ``N <= cap`` with ``P(>= 2 indels in N) <= a * p``.

    Returns ``(N, floored)``.  A single symbol can never hold two indels, so
    ``N = 1`` always qualifies; ``floored`` marks that the bound already
    fails at ``N = 2`` and the budget sits at its floor.
    """
    p = float(p_indel)
    if not 0 < p < 1 or not a_param > 0:
        raise DomainError("need 0 < p_indel < 1 and a > 0")
    bound = a_param * p
    ok = lambda n: prob_two_or_more(n, p) <= bound  # noqa: E731
    if not ok(2):
        return 1, True
    if ok(cap):
        return cap, False
    lo, hi = 2, cap  # ok(lo), not ok(hi); P(>=2) is increasing in N
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, False


def expected_pad_bits(code):
    """Expected number of appended bits for long uniform messages.

    The walk position at message end is an internal node ``v`` with
    probability proportional to ``2^-depth(v)``; from there padding takes the
    1-branch and then 0-branches down to a leaf.  Exact rational result.
    """
    nodes, depth = code.internal_nodes()
    ch = code.children
    leaf = code.symbol_of >= 0
    weight_sum = Fraction(0)
    total = Fraction(0)
    for v in nodes:
        u = ch[v, 1]
        pad = 1
        while not leaf[u]:
            u = ch[u, 0]
            pad += 1
        w = Fraction(1, 2 ** int(depth[v]))
        weight_sum += w
        total += w * pad
    return total / weight_sum


def frame_rate(n_bits, code):
    if n_bits < 1:
        raise DomainError("n_bits must be positive")
    pad = float(expected_pad_bits(code))
    return n_bits / (n_bits + pad)


def eb_n0(es_n0, n_s, cons):
    """Information-bit Eb/N0 with one padding symbol per ``n_s`` symbols charged."""
    if n_s < 1:
        raise DomainError("n_s must be at least one")
    h = cons.entropy_bits
    if h <= 0:
        raise DomainError("single-point constellation carries no information")
    return es_n0 * (1.0 + 1.0 / n_s) / h


def make_plan(cons, code, es_n0, p_indel, a_param, n_symbols=None):
    """FramePlan for a given (or forced) symbol budget."""
    floored = False
    if n_symbols is None:
        n_symbols, floored = select_ns(p_indel, a_param)
    n_bits = max(1, int(round(n_symbols * code.mean_length)))
    return FramePlan(
        es_n0=es_n0, p_indel=float(p_indel), a_param=a_param, n_symbols=int(n_symbols),
        n_bits=n_bits, rate=frame_rate(n_bits, code), eb_n0=eb_n0(es_n0, n_symbols, cons),
        floored=floored,
    )


def tune_a(cons, code, es_n0, a_grid=DEFAULT_A_GRID, budget_bits=10 ** 6, p_indel=None,
           seed=0, simulate=None):
    """Pick the ``a`` on ``a_grid`` with the lowest simulated BER (smaller ``a`` on ties).

    Returns ``(a, {a: ber})``.  ``simulate(plan, bits, seed) -> ber`` defaults
    to the link simulator.
    """
    a_grid = list(a_grid)
    if not a_grid:
        raise DomainError("empty a grid")
    if len(a_grid) == 1:
        return a_grid[0], {}
    if simulate is None:
        from .sim import simulate_plan_ber as simulate
    if p_indel is None:
        p_indel = estimate_p_indel(cons, code, es_n0, rng=seed).p
    bers = {}
    for a in sorted(a_grid):
        plan = make_plan(cons, code, es_n0, p_indel, a)
        bers[a] = simulate(plan, cons, code, budget_bits, seed)
    best = min(sorted(bers), key=lambda a: bers[a])
    return best, bers
