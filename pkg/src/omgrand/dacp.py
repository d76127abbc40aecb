"""Cutting-plane design of the input amplitude distribution.

The input is restricted to a fixed grid of amplitudes with uniform phase.  At
every step the current input distribution induces an output density ``q``;
the per-amplitude divergences ``psi(a) = D(f(.|a) || q)`` form a linear cut
``sum_a p(a) psi(a) >= c``, and the LP over all cuts collected so far yields an
upper bound on capacity together with the next iterate.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .channel import ChannelParams, DomainError, rician_log_density
from .lp import SimplexError, linprog

#: densities below this are treated as exact zeros inside KL integrands
DENSITY_FLOOR = 1e-300
_LOG_FLOOR = np.log(DENSITY_FLOOR)
#: probabilities the LP reports below this are numerical noise
PROB_FLOOR = 1e-12

MODELS = ("amplitude", "complex")


class NumericalSupportError(ArithmeticError):
    """Reference density vanishes where the channel law does not."""


@dataclass(frozen=True)
class AmplitudeGrid:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.float64).ravel()
        if a.size == 0:
            raise DomainError("amplitude grid is empty")
        if np.any(a < 0) or np.any(np.diff(a) <= 0):
            raise DomainError("amplitudes must be non-negative and strictly increasing")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def uniform(cls, step, count):
        return cls(step * np.arange(count))

    @property
    def peak(self):
        return float(self.amplitudes[-1])

    def __len__(self):
        return self.amplitudes.size


@dataclass
class DacpDistribution:
    grid: AmplitudeGrid
    probs: np.ndarray
    avg_power: float = np.inf

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64).ravel()
        if p.shape != self.grid.amplitudes.shape:
            raise DomainError("probs and grid differ in length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise DomainError("probs must be a probability vector")
        if self.power > self.avg_power + 1e-9:
            raise DomainError(f"power {self.power} exceeds constraint {self.avg_power}")
        self.probs = p

    @classmethod
    def cleaned(cls, grid, probs, avg_power=np.inf):
        """Clip LP round-off (negatives and sub-``PROB_FLOOR`` mass) and renormalize."""
        p = np.where(np.asarray(probs) < PROB_FLOOR, 0.0, probs)
        p = p / p.sum()
        a2 = grid.amplitudes ** 2
        if p @ a2 > avg_power:
            # renormalizing can push an active power constraint over by a few ulps
            p = _pull_into_power(p, a2, avg_power)
        return cls(grid, p, avg_power)

    @property
    def amplitudes(self):
        return self.grid.amplitudes

    @property
    def power(self):
        return float(self.probs @ self.grid.amplitudes ** 2)

    @property
    def support(self):
        return np.flatnonzero(self.probs > 0)

    def entropy_bits(self):
        p = self.probs[self.probs > 0]
        return float(-(p * np.log2(p)).sum())


def _pull_into_power(p, a2, avg_power):
    low = np.argmin(a2)
    excess = p @ a2 - avg_power
    shift = min(excess / max(a2.max() - a2[low], 1e-300), 1.0)
    hi = np.argmax(np.where(p > 0, a2, -1))
    moved = min(p[hi], shift)
    p = p.copy()
    p[hi] -= moved
    p[low] += moved
    return p


@dataclass
class DesignTrace:
    iterations: list = field(default_factory=list)
    upper: list = field(default_factory=list)
    lower: list = field(default_factory=list)
    converged: bool = False
    lp_pivots: int = 0

    def gap(self):
        return np.asarray(self.upper) - np.asarray(self.lower)


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

def trapezoid_weights(r):
    """Trapezoid weights on a uniform grid with a Gregory end correction.

    Rician densities leave r = 0 with non-zero slope, which costs the plain
    rule ``h^2 f'(0) / 12``; the correction estimates ``f'`` by a one-sided
    difference at each end.
    """
    n = r.size
    h = r[1] - r[0]
    w = np.full(n, h)
    w[0] = w[-1] = h / 2.0
    if n >= 4:
        w[[0, -1]] -= h / 12.0
        w[[1, -2]] += h / 12.0
    return w


@dataclass(frozen=True)
class RadialQuadrature:
    """Uniform trapezoid rule on ``[0, peak + 8 sqrt(n0/2)]``."""

    r: np.ndarray
    weights: np.ndarray

    @classmethod
    def for_channel(cls, peak, n0, span=8.0):
        sigma = np.sqrt(n0 / 2.0)
        step = min(sigma / 10.0, peak / 1000.0) if peak > 0 else sigma / 10.0
        upper = peak + span * sigma
        n = int(np.ceil(upper / step)) + 1
        r = np.linspace(0.0, upper, n)
        return cls(r, trapezoid_weights(r))

    def integrate(self, values):
        return np.asarray(values) @ self.weights


class AmplitudeChannel:
    """Amplitude grid, noise level and the log transition kernel on a quadrature grid."""

    def __init__(self, grid, n0, quadrature=None, model="amplitude"):
        if model not in MODELS:
            raise DomainError(f"unknown channel model {model!r}")
        self.grid = grid
        self.n0 = float(n0)
        self.model = model
        self.quad = quadrature or RadialQuadrature.for_channel(grid.peak, n0)
        self.log_kernel = rician_log_density(self.quad.r[None, :], grid.amplitudes[:, None], n0)
        with np.errstate(under="ignore"):
            self.kernel = np.where(self.log_kernel > _LOG_FLOOR, np.exp(self.log_kernel), 0.0)
        self._phase_term = self._phase_information() if model == "complex" else np.zeros(len(grid))

    def _phase_information(self):
        # complex KL minus amplitude KL for a circular output density:
        # h(R|a) + E[ln R | a] + ln(2 / (e n0)); zero at a = 0
        r = self.quad.r
        with np.errstate(divide="ignore"):
            log_r = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
        live = self.kernel > 0
        ent = -self.quad.integrate(np.where(live, self.kernel * np.where(live, self.log_kernel, 0.0), 0.0))
        mean_log_r = self.quad.integrate(self.kernel * log_r)
        phi = ent + mean_log_r + np.log(2.0 / (np.e * self.n0))
        # exact value at the origin; quadrature would leave ~1e-5 there
        return np.where(self.grid.amplitudes == 0, 0.0, phi)

    def log_output_density(self, probs):
        probs = np.asarray(probs, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return logsumexp(self.log_kernel + np.log(probs)[:, None], axis=0)

    def output_density(self, probs):
        return np.exp(self.log_output_density(probs))

    def sensitivities(self, probs=None, log_q=None):
        """Divergence of every grid amplitude's law from the output density (nats)."""
        if log_q is None:
            log_q = self.log_output_density(probs)
        live = self.kernel > 0
        if np.any(live & ~np.isfinite(log_q)[None, :]):
            raise NumericalSupportError("output density vanishes inside a channel law's support")
        diff = np.where(live, self.log_kernel - np.where(live, log_q, 0.0), 0.0)
        integrand = np.where(live, self.kernel * diff, 0.0)
        return self.quad.integrate(integrand) + self._phase_term

    def mutual_information(self, probs):
        probs = np.asarray(probs, dtype=np.float64)
        return float(probs @ self.sensitivities(probs))


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def output_density(p, r_grid, n0):
    """Output amplitude density ``q(r) = sum_a p(a) f(r|a)`` evaluated on ``r_grid``."""
    r_grid = np.asarray(r_grid, dtype=np.float64)
    if r_grid.size == 0:
        raise DomainError("empty quadrature grid")
    live = p.probs > 0
    logs = rician_log_density(r_grid[None, :], p.amplitudes[live][:, None], n0)
    with np.errstate(under="ignore"):
        return np.exp(logsumexp(logs + np.log(p.probs[live])[:, None], axis=0))


def sensitivity(a, q, r_grid, n0):
    """``D(f(.|a) || q)`` by the trapezoid rule on a uniform ``r_grid`` (nats)."""
    r_grid = np.asarray(r_grid, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    log_f = rician_log_density(r_grid, a, n0)
    live = log_f > _LOG_FLOOR
    if np.any(live & (q <= 0)):
        raise NumericalSupportError("q vanishes where f(.|a) does not")
    safe_log_f = np.where(live, log_f, 0.0)
    f = np.where(live, np.exp(safe_log_f), 0.0)
    integrand = np.where(live, f * (safe_log_f - np.log(np.where(live, q, 1.0))), 0.0)
    return float(integrand @ trapezoid_weights(r_grid))


def mutual_information(p, n0, model="amplitude"):
    """I(A_X; A_Y) in nats (or I(X;Y) with uniform phase for ``model='complex'``)."""
    return AmplitudeChannel(p.grid, n0, model=model).mutual_information(p.probs)


def lp_max_min(cuts, grid, avg_power, max_pivots=20000):
    """Solve ``max c s.t. sum_a p(a) psi_i(a) >= c for every cut, p in the feasible set``.

    Returns ``(DacpDistribution, c)``.
    """
    psi = np.atleast_2d(np.asarray(cuts, dtype=np.float64))
    if psi.shape[0] == 0:
        raise DomainError("at least one cut is required")
    n = len(grid)
    # the LP works with c' = c + shift >= 0 so all variables stay non-negative
    shift = max(0.0, -psi.min())
    shifted = psi + shift
    a2 = grid.amplitudes ** 2
    # variables [p_0 .. p_{n-1}, c']
    A_ub = np.zeros((psi.shape[0] + 1, n + 1))
    A_ub[:-1, :n] = -shifted
    A_ub[:-1, n] = 1.0
    A_ub[-1, :n] = a2
    b_ub = np.zeros(psi.shape[0] + 1)
    b_ub[-1] = avg_power
    A_eq = np.zeros((1, n + 1))
    A_eq[0, :n] = 1.0
    cost = np.zeros(n + 1)
    cost[n] = -1.0
    res = linprog(cost, A_ub, b_ub, A_eq, [1.0], max_pivots=max_pivots)
    dist = DacpDistribution.cleaned(grid, res.x[:n], avg_power)
    c = float((psi @ dist.probs).min())
    lp_max_min.last_pivots = res.pivots
    return dist, c


lp_max_min.last_pivots = 0


def design_dacp(grid, params, tol=1e-4, max_iter=500, model="amplitude", channel=None):
    """Cutting-plane search for the capacity-achieving amplitude distribution.

    Returns ``(distribution, trace)``.  If ``max_iter`` is reached without the
    upper/lower bound gap dropping below ``tol`` the best iterate (largest
    mutual information) is returned and ``trace.converged`` is False.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if abs(grid.peak - params.peak_m) > 1e-12 * max(1.0, params.peak_m):
        raise DomainError("largest grid amplitude must equal the peak constraint")
    chan = channel or AmplitudeChannel(grid, params.n0, model=model)
    a2 = grid.amplitudes ** 2
    start = (a2 <= params.avg_power * (1 + 1e-12)).astype(np.float64)
    p = DacpDistribution(grid, start / start.sum(), params.avg_power)

    cuts = [chan.sensitivities(p.probs)]
    trace = DesignTrace()
    best, best_mi = p, float(p.probs @ cuts[0])
    for n in range(1, max_iter + 1):
        p, c = lp_max_min(cuts, grid, params.avg_power)
        trace.lp_pivots += lp_max_min.last_pivots
        psi = chan.sensitivities(p.probs)
        mi = float(p.probs @ psi)
        trace.iterations.append(n)
        trace.upper.append(c)
        trace.lower.append(mi)
        if mi > best_mi:
            best, best_mi = p, mi
        if c - mi < tol:
            trace.converged = True
            return p, trace
        cuts.append(psi)
    return best, trace


__all__ = [
    "AmplitudeChannel", "AmplitudeGrid", "DacpDistribution", "DesignTrace",
    "NumericalSupportError", "RadialQuadrature", "SimplexError", "design_dacp",
    "lp_max_min", "mutual_information", "output_density", "sensitivity",
]
