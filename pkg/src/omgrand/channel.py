"""Complex AWGN channel and the amplitude (Rician) transition density."""
from dataclasses import dataclass

import numpy as np

from . import kernels


class DomainError(ValueError):
    """Argument outside the domain of a numeric routine."""


@dataclass(frozen=True)
class ChannelParams:
    """Noise level and input constraints of the peak/average limited channel.

    ``n0`` is the variance of the complex noise (each quadrature carries
    ``n0 / 2``), ``peak_m`` the amplitude limit and ``avg_power`` the bound on
    ``E|X|^2``.
    """

    n0: float
    peak_m: float
    avg_power: float

    def __post_init__(self):
        if not (self.n0 > 0 and np.isfinite(self.n0)):
            raise DomainError(f"n0 must be positive, got {self.n0}")
        if not self.peak_m > 0:
            raise DomainError(f"peak_m must be positive, got {self.peak_m}")
        if not 0 < self.avg_power <= self.peak_m ** 2 * (1 + 1e-12):
            raise DomainError(
                f"avg_power must lie in (0, peak_m^2], got {self.avg_power}"
            )

    @property
    def es_n0(self):
        return self.avg_power / self.n0


def log_bessel_i0(z, leading_order=False):
    """Natural log of the modified Bessel function I0.

    Uses the power series below ``kernels.BESSEL_CROSSOVER`` and the
    large-argument form ``z - ln(2 pi z) / 2`` above it.  By default the
    asymptotic branch keeps the Hankel correction terms so that the two
    branches agree to ~1e-13 at the seam; ``leading_order=True`` drops them.
    Accepts scalars or arrays.
    """
    arr = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("log_bessel_i0 requires finite z >= 0")
    out = kernels.log_i0(arr, leading_order=leading_order)
    return float(out) if out.ndim == 0 else out


def rician_log_density(r, a, n0):
    """Log density of the received amplitude ``r`` given input amplitude ``a``.

    ln[(2r/n0) exp(-(r^2 + a^2)/n0) I0(2ra/n0)], evaluated without ever
    forming the exponential or the Bessel function.  Broadcasts over ``r`` and
    ``a``; returns ``-inf`` where ``r == 0``.
    """
    if not n0 > 0:
        raise DomainError(f"n0 must be positive, got {n0}")
    r = np.asarray(r, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if np.any(r < 0) or np.any(a < 0) or not (np.all(np.isfinite(r)) and np.all(np.isfinite(a))):
        raise DomainError("amplitudes must be finite and non-negative")
    r, a = np.broadcast_arrays(r, a)
    z = 2.0 * r * a / n0
    with np.errstate(divide="ignore"):
        out = np.log(2.0 * r / n0) - (r - a) ** 2 / n0 + kernels.log_i0(z, scaled=True)
    return float(out) if out.ndim == 0 else out


def add_noise(x, params, rng):
    """Pass complex samples through the channel: ``x + n``, n ~ CN(0, n0)."""
    x = np.asarray(x, dtype=np.complex128)
    sigma = np.sqrt(params.n0 / 2.0)
    noise = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + sigma * noise
