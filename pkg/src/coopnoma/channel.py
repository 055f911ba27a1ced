"""Per-hop link statistics, selected-antenna gain distributions and sampling.

The squared envelope of each estimated channel element is Gamma distributed
(shape ``m``, mean ``omega_hat``). With MRT over ``n_t`` transmit antennas the
per-receive-antenna gain is Gamma(``m*n_t``); receive antenna selection takes
the best of ``n_r`` such gains. In the second hop the ``L`` users are ranked by
their selected gain, so user ``l`` sees the ``l``-th smallest of ``L`` draws.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .specfun import binomial, regularized_lower_gamma, regularized_upper_gamma

__all__ = [
    "HopStats",
    "ComplexChannelMatrix",
    "make_hop_stats",
    "cdf_first_hop",
    "sf_selected",
    "pdf_unordered",
    "cdf_unordered",
    "pdf_ordered",
    "cdf_ordered",
    "cdf_ordered_series",
    "order_coefficient",
    "sample_channel_matrix",
    "select_receive_antenna",
]


def _positive_int(name: str, value) -> int:
    if isinstance(value, bool):
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class HopStats:
    """Statistics of one hop.

    ``omega`` is the true mean squared gain per element (``d**-alpha``),
    ``omega_hat`` the estimated part and ``sigma_e2`` the per-element
    estimation-error variance, so ``omega_hat + sigma_e2 == omega``.
    """

    m: int
    n_t: int
    n_r: int
    omega: float
    omega_hat: float
    sigma_e2: float
    epsilon: float
    d: float = 1.0
    alpha: float = 4.0

    @property
    def shape(self) -> int:
        """Gamma shape of the MRT gain on one receive antenna."""
        return self.m * self.n_t

    @property
    def rate(self) -> float:
        return self.m / self.omega_hat


def make_hop_stats(d: float, alpha: float, epsilon: float, m: int, n_t: int, n_r: int) -> HopStats:
    m = _positive_int("Nakagami m", m)
    n_t = _positive_int("n_t", n_t)
    n_r = _positive_int("n_r", n_r)
    if not d > 0 or not math.isfinite(d):
        raise ValueError(f"distance must be positive, got {d!r}")
    if not alpha > 0:
        raise ValueError(f"path-loss exponent must be positive, got {alpha!r}")
    if not 0 <= epsilon < 1:
        raise ValueError(f"relative estimation error must lie in [0, 1), got {epsilon!r}")
    omega = float(d) ** (-float(alpha))
    return HopStats(
        m=m,
        n_t=n_t,
        n_r=n_r,
        omega=omega,
        omega_hat=(1.0 - epsilon) * omega,
        sigma_e2=epsilon * omega,
        epsilon=float(epsilon),
        d=float(d),
        alpha=float(alpha),
    )


def _single_cdf(stats: HopStats, x):
    return regularized_lower_gamma(stats.shape, np.asarray(x, dtype=float) * stats.rate)


def _single_sf(stats: HopStats, x):
    return regularized_upper_gamma(stats.shape, np.asarray(x, dtype=float) * stats.rate)


def cdf_first_hop(stats: HopStats, x):
    """CDF of the best-of-``n_r`` MRT gain."""
    return _single_cdf(stats, x) ** stats.n_r


def sf_selected(stats: HopStats, x):
    """``1 - cdf_first_hop`` computed without cancellation."""
    sf1 = np.asarray(_single_sf(stats, x), dtype=float)
    with np.errstate(divide="ignore"):  # sf1 == 1 at x == 0 gives log(0)
        return -np.expm1(stats.n_r * np.log1p(-np.minimum(sf1, 1.0)))


def cdf_unordered(stats: HopStats, x):
    return cdf_first_hop(stats, x)


def pdf_unordered(stats: HopStats, x):
    """Density of one user's selected second-hop gain (unordered)."""
    x = np.asarray(x, dtype=float)
    q = stats.shape
    c = stats.rate
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(np.where(x > 0, x, 1.0))
        base = np.exp(q * math.log(c) + (q - 1) * logx - c * x - math.lgamma(q))
    if q == 1:
        base = np.where(x >= 0, base, 0.0)
    else:
        base = np.where(x > 0, base, 0.0)
    out = stats.n_r * base * _single_cdf(stats, x) ** (stats.n_r - 1)
    return float(out) if out.ndim == 0 else out


def order_coefficient(l: int, L: int) -> int:
    """``L! / ((L-l)! (l-1)!)`` for the l-th order statistic of L draws."""
    _check_rank(l, L)
    return math.factorial(L) // (math.factorial(L - l) * math.factorial(l - 1))


def _check_rank(l: int, L: int) -> None:
    if not (isinstance(l, numbers.Integral) and isinstance(L, numbers.Integral)) or not 1 <= l <= L:
        raise ValueError(f"user index must satisfy 1 <= l <= L, got l={l!r}, L={L!r}")


def pdf_ordered(stats: HopStats, l: int, L: int, x):
    """Density of the l-th smallest selected gain among ``L`` users.

    The alternating sum over ``t`` collapses to ``(1 - F)^(L-l)``, which is
    evaluated from the survival function directly.
    """
    _check_rank(l, L)
    f = pdf_unordered(stats, x)
    F = cdf_unordered(stats, x)
    S = sf_selected(stats, x)
    out = order_coefficient(l, L) * f * F ** (l - 1) * S ** (L - l)
    return float(out) if np.ndim(out) == 0 else out


def cdf_ordered(stats: HopStats, l: int, L: int, x):
    """CDF of the l-th smallest of ``L`` i.i.d. selected gains.

    Summed as ``P(Binomial(L, F) >= l)``; every term is non-negative so both
    tails stay accurate.
    """
    _check_rank(l, L)
    F = np.asarray(cdf_unordered(stats, x), dtype=float)
    S = np.asarray(sf_selected(stats, x), dtype=float)
    out = np.zeros_like(F)
    for j in range(l, L + 1):
        out = out + binomial(L, j) * F**j * S ** (L - j)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def cdf_ordered_series(stats: HopStats, l: int, L: int, x):
    """Literal alternating-series form ``Q_l sum_t (-1)^t/(l+t) C(L-l,t) F^(l+t)``."""
    _check_rank(l, L)
    F = np.asarray(cdf_unordered(stats, x), dtype=float)
    out = np.zeros_like(F)
    for t in range(L - l + 1):
        out = out + (-1) ** t / (l + t) * binomial(L - l, t) * F ** (l + t)
    out = order_coefficient(l, L) * out
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ComplexChannelMatrix:
    """Estimated channel, rows are transmit antennas and columns receive antennas."""

    entries: np.ndarray

    @property
    def column_norms2(self) -> np.ndarray:
        return np.sum(np.abs(self.entries) ** 2, axis=-2)


def sample_gains(rng: np.random.Generator, stats: HopStats, size) -> np.ndarray:
    """Draw complex channel entries with Gamma(m) power and uniform phase."""
    power = rng.gamma(shape=stats.m, scale=stats.omega_hat / stats.m, size=size)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=size)
    return np.sqrt(power) * np.exp(1j * phase)


def sample_channel_matrix(rng: np.random.Generator, stats: HopStats) -> ComplexChannelMatrix:
    return ComplexChannelMatrix(sample_gains(rng, stats, (stats.n_t, stats.n_r)))


def select_receive_antenna(matrix: ComplexChannelMatrix):
    """Pick the receive antenna with the largest column norm.

    Returns a 1-based index, the selected squared norm and the selected
    column. ``argmax`` keeps the lowest index on ties.
    """
    norms = matrix.column_norms2
    if norms.size == 0:
        raise ValueError("empty channel matrix")
    j = int(np.argmax(norms))
    return j + 1, float(norms[j]), matrix.entries[:, j].copy()
