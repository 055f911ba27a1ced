"""Special functions and series coefficients used by the outage analysis.

Everything here is restricted to the integer-parameter cases that the
Nakagami-m series expansions need. Functions accept plain floats; the
coefficient and Bessel helpers also accept ``mpmath.mpf`` values so the
closed-form evaluator can run them at extended precision.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "CoeffTable",
    "regularized_lower_gamma",
    "regularized_upper_gamma",
    "bessel_k",
    "bessel_k_orders",
    "multinomial_coeffs",
    "ln_factorial",
    "binomial",
]

_TAIL_EPS = 1e-17
_TAIL_MAX_TERMS = 2000


def _check_shape(shape) -> int:
    if isinstance(shape, bool) or not isinstance(shape, numbers.Integral):
        if isinstance(shape, float) and shape.is_integer():
            shape = int(shape)
        else:
            raise ValueError(f"gamma shape must be a positive integer, got {shape!r}")
    if shape < 1:
        raise ValueError(f"gamma shape must be a positive integer, got {shape!r}")
    return int(shape)


def _head_sum(shape: int, x: np.ndarray) -> np.ndarray:
    # e^{-x} sum_{k<shape} x^k/k!, every term positive
    term = np.exp(-x)
    total = term.copy()
    for k in range(1, shape):
        term = term * x / k
        total += term
    return total


def _tail_sum(shape: int, x: np.ndarray) -> np.ndarray:
    # e^{-x} sum_{k>=shape} x^k/k!, used where x < shape so terms shrink fast
    with np.errstate(divide="ignore"):
        logx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
    term = np.exp(shape * logx - x - math.lgamma(shape + 1))
    total = term.copy()
    k = shape
    for _ in range(_TAIL_MAX_TERMS):
        k += 1
        term = term * x / k
        total += term
        if np.all(term <= _TAIL_EPS * total):
            break
    return total


def _split_eval(shape: int, x, want_lower: bool):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr) & ~np.isposinf(arr)):
        raise ValueError("gamma argument must be non-negative")
    flat = np.atleast_1d(arr).astype(float)
    out = np.empty_like(flat)
    small = flat < shape
    big = ~small
    inf = np.isposinf(flat)
    if np.any(small):
        tail = _tail_sum(shape, flat[small])
        out[small] = tail if want_lower else 1.0 - tail
    if np.any(big):
        xb = np.where(inf[big], 0.0, flat[big])
        head = _head_sum(shape, xb)
        head = np.where(inf[big], 0.0, head)
        out[big] = 1.0 - head if want_lower else head
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def regularized_lower_gamma(shape: int, x):
    """Regularized lower incomplete gamma P(shape, x) for integer shape.

    Uses the finite Poisson series ``1 - e^{-x} sum_{k<shape} x^k/k!``. Below
    ``x = shape`` the complementary tail series is summed instead so that
    tiny probabilities keep full relative precision.

    Parameters
    ----------
    shape : int
        Positive integer shape.
    x : float or array_like
        Non-negative argument(s).
    """
    return _split_eval(_check_shape(shape), x, want_lower=True)


def regularized_upper_gamma(shape: int, x):
    """Complement ``1 - P(shape, x)`` without cancellation."""
    return _split_eval(_check_shape(shape), x, want_lower=False)


def bessel_k_orders(max_order: int, x, k0=None, k1=None):
    """Return ``[K_0(x), ..., K_max_order(x)]`` by upward recurrence.

    ``K_{n+1} = K_{n-1} + (2n/x) K_n`` is stable in the upward direction.
    Seeds default to scipy's K_0/K_1; pass ``k0``/``k1`` (e.g. mpmath values)
    to run the recurrence in another number type.
    """
    if x <= 0:
        raise ValueError(f"bessel_k requires x > 0, got {x!r}")
    if k0 is None or k1 is None:
        k0 = float(special.k0(float(x)))
        k1 = float(special.k1(float(x)))
    out = [k0, k1]
    for n in range(1, max_order):
        out.append(out[n - 1] + (2 * n / x) * out[n])
    return out[: max_order + 1]


def bessel_k(order: int, x: float) -> float:
    """Modified Bessel function of the second kind for integer order."""
    if x <= 0:
        raise ValueError(f"bessel_k requires x > 0, got {x!r}")
    n = abs(int(order))
    if n > 200:
        raise ValueError("bessel_k order magnitude limited to 200")
    return float(bessel_k_orders(max(n, 1), x)[n])


@dataclass(frozen=True)
class CoeffTable:
    """Coefficients of ``[sum_{k<base_terms} (scale*x)^k / k!]^power``."""

    power: int
    base_terms: int
    scale: float
    coeffs: tuple

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, idx):
        return self.coeffs[idx]

    def evaluate(self, t):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc


@lru_cache(maxsize=256)
def _unit_scale_coeffs(power: int, base_terms: int) -> tuple:
    """Exact rational coefficients for ``scale = 1``.

    J.C.P. Miller recurrence for the power of a series with
    ``w_beta = 1 / beta!`` (zero past ``base_terms - 1``)::

        theta_0 = 1
        theta_x = 1/(x w_0) * sum_{beta=1}^{min(x, q-1)} (beta(power+1) - x) w_beta theta_{x-beta}

    The terms alternate in sign, so it runs in exact arithmetic.
    """
    q = base_terms
    w = [Fraction(1, math.factorial(beta)) for beta in range(q)]
    theta = [Fraction(1)]
    for x in range(1, power * (q - 1) + 1):
        acc = Fraction(0)
        for beta in range(1, min(x, q - 1) + 1):
            acc += (beta * (power + 1) - x) * w[beta] * theta[x - beta]
        theta.append(acc / x)
    return tuple(theta)


def multinomial_coeffs(power: int, base_terms: int, scale) -> CoeffTable:
    """Power-series coefficients of a truncated exponential raised to ``power``.

    ``theta_x(scale) = scale^x * theta_x(1)``; the unit-scale table comes
    from the exact recurrence and is cached. ``scale`` may be an
    ``mpmath.mpf``; the result then carries its precision.
    """
    if power < 1 or base_terms < 1:
        raise ValueError("power and base_terms must be positive integers")
    if not scale > 0:
        raise ValueError("scale must be positive")
    unit = _unit_scale_coeffs(int(power), int(base_terms))
    is_float = isinstance(scale, (float, int, np.floating))
    theta = []
    s_pow = scale**0
    for x, r in enumerate(unit):
        if is_float:
            try:
                val = float(s_pow) * float(r)
            except OverflowError:
                raise OverflowError(f"multinomial coefficient overflow at index {x}") from None
            if not math.isfinite(val):
                raise OverflowError(f"multinomial coefficient overflow at index {x}")
        else:
            val = s_pow * r.numerator / r.denominator
        theta.append(val)
        s_pow = s_pow * scale
    return CoeffTable(power=power, base_terms=base_terms, scale=scale, coeffs=tuple(theta))


def ln_factorial(n: int) -> float:
    if n < 0:
        raise ValueError("ln_factorial needs n >= 0")
    if n < 171:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1)


def binomial(n: int, k: int) -> int:
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"binomial requires 0 <= k <= n, got n={n}, k={k}")
    return math.comb(n, k)
