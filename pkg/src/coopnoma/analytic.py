"""Outage analysis for the dual-hop AF NOMA downlink with MRT/RAS.

All SNR values are linear, with unit noise power at relay and users and
equal transmit power at the base station and relay, so ``snr == P``.

The approximate outage probability of user ``l`` is the probability that the
upper-bound SINR falls below the threshold at any SIC stage ``j <= l``. It
is available three ways: the closed-form series (:func:`op_closed_form`),
direct numerical integration (:func:`op_quadrature`) and, for the high-SNR
regime, the bounds / floors / asymptotics below.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy import integrate

from . import channel
from .channel import HopStats, make_hop_stats
from .specfun import bessel_k_orders, binomial, multinomial_coeffs

__all__ = [
    "NumericalInstabilityWarning",
    "QuadratureError",
    "SystemScenario",
    "DecodeTargets",
    "OutageReport",
    "make_scenario",
    "decode_targets",
    "op_closed_form",
    "op_quadrature",
    "op_bounds",
    "error_floor",
    "op_asymptotic",
    "diversity_array_gain",
    "asymptotic_terms",
    "oma_threshold",
    "oma_scenario",
    "op_oma",
    "outage_report",
]

DEFAULT_ALLOC = (3 / 6, 2 / 6, 1 / 6)
DEFAULT_THRESHOLDS = (0.9, 1.5, 2.0)

CLAMP_SLACK = 1e-9
CLOSED_FORM_RTOL = 1e-6
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 10_000


class NumericalInstabilityWarning(RuntimeWarning):
    pass


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, abserr: float):
        super().__init__(message)
        self.abserr = abserr


@dataclass(frozen=True)
class SystemScenario:
    """One experiment: both hops, user count, power split and thresholds."""

    L: int
    hop1: HopStats
    hop2: HopStats
    alloc: tuple
    thresholds: tuple

    def __post_init__(self):
        alloc = tuple(float(a) for a in self.alloc)
        thr = tuple(float(g) for g in self.thresholds)
        object.__setattr__(self, "alloc", alloc)
        object.__setattr__(self, "thresholds", thr)
        if self.L < 1 or len(alloc) != self.L or len(thr) != self.L:
            raise ValueError(f"need {self.L} power coefficients and thresholds, got {len(alloc)} and {len(thr)}")
        if any(not a > 0 for a in alloc):
            raise ValueError("power coefficients must be positive")
        if abs(math.fsum(alloc) - 1.0) > 1e-12:
            raise ValueError(f"power coefficients must sum to 1, got {math.fsum(alloc)!r}")
        if any(alloc[i] < alloc[i + 1] for i in range(self.L - 1)):
            raise ValueError("power coefficients must be non-increasing (a_1 >= ... >= a_L)")
        if any(not g > 0 for g in thr):
            raise ValueError("SINR thresholds must be positive")

    def with_hops(self, hop1: HopStats = None, hop2: HopStats = None) -> "SystemScenario":
        return SystemScenario(self.L, hop1 or self.hop1, hop2 or self.hop2, self.alloc, self.thresholds)


def make_scenario(
    n_t1: int = 1,
    n_r1: int = 1,
    n_t2: int = 1,
    n_r2: int = 1,
    m1: int = 1,
    m2: int = 1,
    d1: float = 0.5,
    d2: float = 0.5,
    alpha: float = 4.0,
    eps_sr: float = 0.0,
    eps_l: float = 0.0,
    alloc: Sequence[float] = DEFAULT_ALLOC,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> SystemScenario:
    hop1 = make_hop_stats(d1, alpha, eps_sr, m1, n_t1, n_r1)
    hop2 = make_hop_stats(d2, alpha, eps_l, m2, n_t2, n_r2)
    return SystemScenario(len(alloc), hop1, hop2, tuple(alloc), tuple(thresholds))


@dataclass(frozen=True)
class DecodeTargets:
    """SNR-dependent decoding quantities.

    ``mu[l-1]`` and ``zeta[l-1]`` are ``None`` when some SIC stage ``j <= l``
    can never reach its threshold (``a_j - gth_j * Sigma_j <= 0``).
    """

    snr: float
    sigma_j: tuple
    zeta: tuple
    mu: tuple
    alpha1: float
    alpha2: float
    alpha3: float
    feasible: tuple = field(default=())


def _alphas(sc: SystemScenario, snr: float):
    el = sc.hop2.sigma_e2
    esr = sc.hop1.sigma_e2
    a1 = snr * el + 1.0
    a2 = snr * esr + 1.0
    a3 = snr * snr * el * esr + snr * el + snr * esr + 1.0
    return a1, a2, a3


def _zetas(sc: SystemScenario):
    L = sc.L
    sig = tuple(math.fsum(sc.alloc[j + 1:]) for j in range(L))
    zeta = []
    running = 0.0
    ok = True
    for j in range(L):
        den = sc.alloc[j] - sc.thresholds[j] * sig[j]
        if ok and den > 0:
            running = max(running, sc.thresholds[j] / den)
        else:
            ok = False
        zeta.append(running if ok else None)
    return sig, tuple(zeta)


def decode_targets(sc: SystemScenario, snr: float) -> DecodeTargets:
    if not snr > 0:
        raise ValueError(f"snr must be positive (linear), got {snr!r}")
    sig, zeta = _zetas(sc)
    mu = tuple(None if z is None else z / snr for z in zeta)
    a1, a2, a3 = _alphas(sc, snr)
    return DecodeTargets(
        snr=float(snr),
        sigma_j=sig,
        zeta=zeta,
        mu=mu,
        alpha1=a1,
        alpha2=a2,
        alpha3=a3,
        feasible=tuple(z is not None for z in zeta),
    )


def _check_user(sc: SystemScenario, l: int) -> None:
    if not 1 <= l <= sc.L:
        raise ValueError(f"user index must be in 1..{sc.L}, got {l!r}")


def _clamp(p: float, what: str) -> float:
    if p < -CLAMP_SLACK or p > 1.0 + CLAMP_SLACK or not math.isfinite(p):
        warnings.warn(f"{what} evaluated to {p!r}, outside [0, 1]", NumericalInstabilityWarning, stacklevel=3)
    if not math.isfinite(p):
        return 1.0
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# closed form


def _closed_form_sum(sc: SystemScenario, snr: float, l: int, mu: float, dps: int):
    """Evaluate the series at ``dps`` digits; returns (value, condition)."""
    h1, h2 = sc.hop1, sc.hop2
    L = sc.L
    with mpmath.workdps(dps):
        mpf = mpmath.mpf
        g = mpf(snr)
        m_u = mpf(mu)
        el, esr = mpf(h2.sigma_e2), mpf(h1.sigma_e2)
        a1 = g * el + 1
        a2 = g * esr + 1
        a3 = g * g * el * esr + g * el + g * esr + 1
        c1 = mpf(h1.m) / mpf(h1.omega_hat)
        c2 = mpf(h2.m) / mpf(h2.omega_hat)
        q1, q2 = h1.shape, h2.shape
        big_b = m_u * (g * m_u * a1 * a2 + a3) / g
        ma1 = m_u * a1
        ma2 = m_u * a2

        theta1 = {p: multinomial_coeffs(p, q1, c1).coeffs for p in range(1, h1.n_r + 1)}
        r_max = h2.n_r * L - 1
        theta2 = {0: (mpf(1),)}
        for r in range(1, r_max + 1):
            theta2[r] = multinomial_coeffs(r, q2, c2).coeffs

        # signed integer weight of each (p, r) pair after summing over t
        weights = {}
        for p in range(1, h1.n_r + 1):
            for t in range(L - l + 1):
                n_pow = h2.n_r * (l + t) - 1
                for r in range(n_pow + 1):
                    w = (-1) ** (p + t + r) * binomial(h1.n_r, p) * binomial(L - l, t) * binomial(n_pow, r)
                    weights[(p, r)] = weights.get((p, r), 0) + w

        total = mpf(0)
        abs_total = mpf(0)
        for (p, r), w in sorted(weights.items()):
            if w == 0:
                continue
            rate = (r + 1) * c2
            b = p * c1 * big_b
            k_max = p * (q1 - 1)
            n_max = q2 - 1 + r * (q2 - 1)
            z = 2 * mpmath.sqrt(rate * b)
            top = max(k_max, n_max + 1, 1)
            kv = bessel_k_orders(top, z, mpmath.besselk(0, z), mpmath.besselk(1, z))
            ratio = mpmath.sqrt(b / rate)
            # I4[nu] = int_0^inf y^{nu-1} e^{-rate*y - b/y} dy, nu = k2 - k1 + 1
            i4 = {nu: 2 * ratio**nu * kv[abs(nu)] for nu in range(1 - k_max, n_max + 2)}
            pw1 = [ma1**i for i in range(n_max + 1)]
            pw2 = [ma2**i for i in range(k_max + 1)]
            pwb = [big_b**i for i in range(k_max + 1)]
            h_tab = [
                [
                    mpmath.fsum(binomial(n, k2) * pw1[n - k2] * i4[k2 - k1 + 1] for k2 in range(n + 1))
                    for k1 in range(k_max + 1)
                ]
                for n in range(n_max + 1)
            ]
            inner = mpf(0)
            for k in range(k_max + 1):
                th1 = theta1[p][k]
                s_acc = mpf(0)
                for s, th2 in enumerate(theta2[r]):
                    n = q2 + s - 1
                    j_nk = mpmath.fsum(
                        binomial(k, k1) * pw2[k - k1] * pwb[k1] * h_tab[n][k1] for k1 in range(k + 1)
                    )
                    s_acc += th2 * j_nk
                inner += th1 * s_acc
            term = mpmath.exp(-rate * ma1 - p * c1 * ma2) * inner
            total += w * term
            abs_total += abs(w) * term
        pref = channel.order_coefficient(l, L) * h2.n_r * c2**q2 / mpmath.factorial(q2 - 1)
        value = 1 + pref * total
        scale = 1 + pref * abs_total
        cond = scale / abs(value) if value != 0 else mpmath.inf
        return value, cond


def _closed_form_value(sc: SystemScenario, snr: float, l: int, mu: float):
    """Closed form with precision raised until the cancellation estimate is tiny."""
    dps = 30
    while dps <= 400:
        value, cond = _closed_form_sum(sc, snr, l, mu, dps)
        # digits lost to cancellation; keep ~15 clean digits
        lost = 0 if not mpmath.isfinite(cond) else int(mpmath.ceil(mpmath.log10(cond)))
        if mpmath.isfinite(cond) and lost + 18 <= dps:
            return float(value), True
        dps = max(dps * 2, lost + 25) if mpmath.isfinite(cond) else dps * 2
    return float(value), False


def op_closed_form(sc: SystemScenario, snr: float, l: int) -> float:
    """Approximate outage probability of user ``l`` from the closed-form series.

    The seven-fold alternating series is regrouped by ``(p, r)`` and summed in
    extended precision; the precision grows with the detected cancellation.
    If the cancellation cannot be controlled the quadrature value is returned
    with a :class:`NumericalInstabilityWarning`.
    """
    _check_user(sc, l)
    dt = decode_targets(sc, snr)
    mu = dt.mu[l - 1]
    if mu is None:
        return 1.0
    value, ok = _closed_form_value(sc, snr, l, mu)
    if not ok:
        warnings.warn(
            f"closed form lost precision for user {l} at snr={snr!r}; using quadrature",
            NumericalInstabilityWarning,
            stacklevel=2,
        )
        return op_quadrature(sc, snr, l)
    return _clamp(value, "closed-form outage")


# ---------------------------------------------------------------------------
# quadrature


def _scalar_ordered_pdf(h: HopStats, l: int, L: int):
    q, c, nr = h.shape, h.rate, h.n_r
    logc = math.log(c)
    lg = math.lgamma(q)
    coef = channel.order_coefficient(l, L)

    def single(x):
        # (P(q, cx), Q(q, cx)) for integer q
        y = c * x
        if y < q:
            term = math.exp(q * math.log(y) - y - math.lgamma(q + 1)) if y > 0 else 0.0
            tail = term
            k = q
            while term > 1e-17 * tail:
                k += 1
                term *= y / k
                tail += term
            return tail, 1.0 - tail
        term = math.exp(-y)
        head = term
        for k in range(1, q):
            term *= y / k
            head += term
        return 1.0 - head, head

    def pdf(x):
        if x <= 0:
            return 0.0
        base = math.exp(q * logc + (q - 1) * math.log(x) - c * x - lg)
        p1, s1 = single(x)
        F = p1**nr
        S = -math.expm1(nr * math.log1p(-s1)) if s1 < 1 else 1.0
        return coef * nr * base * p1 ** (nr - 1) * F ** (l - 1) * S ** (L - l)

    def cdf_selected(x):
        if x <= 0:
            return 0.0
        return single(x)[0] ** nr

    return pdf, cdf_selected


def _selected_cdf_scalar(h: HopStats):
    return _scalar_ordered_pdf(h, 1, 1)[1]


def op_quadrature(sc: SystemScenario, snr: float, l: int) -> float:
    """Approximate outage of user ``l`` by adaptive integration.

    Integrates ``f_l(x) F_sr(mu (snr a2 x + a3) / (snr (x - mu a1)))`` over
    ``x > mu a1`` after the substitution ``y = x - mu a1``, ``t = y/(1+y)``.
    """
    _check_user(sc, l)
    dt = decode_targets(sc, snr)
    mu = dt.mu[l - 1]
    if mu is None:
        return 1.0
    a1, a2, a3 = dt.alpha1, dt.alpha2, dt.alpha3
    pdf_l, _ = _scalar_ordered_pdf(sc.hop2, l, sc.L)
    cdf_sr = _selected_cdf_scalar(sc.hop1)
    x0 = mu * a1
    big_b = mu * (snr * mu * a1 * a2 + a3) / snr
    ma2 = mu * a2

    def integrand(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        y = t / (1.0 - t)
        f = pdf_l(x0 + y)
        if f == 0.0:
            return 0.0
        return f * cdf_sr(ma2 + big_b / y) / (1.0 - t) ** 2

    head = float(channel.cdf_ordered(sc.hop2, l, sc.L, x0))
    # natural scales: where F_sr(g) turns over, and the second-hop mean
    scales = [big_b * sc.hop1.rate, 1.0 / sc.hop2.rate, x0]
    pts = set()
    for s in scales:
        for f in (0.1, 1.0, 10.0):
            y = s * f
            if y > 0 and math.isfinite(y):
                t = y / (1.0 + y)
                if 1e-12 < t < 1 - 1e-12:
                    pts.add(t)
    val, abserr, info = integrate.quad(
        integrand,
        0.0,
        1.0,
        points=sorted(pts) or None,
        epsabs=min(QUAD_EPSABS, max(head, 1e-300) * QUAD_EPSREL),
        epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT,
        full_output=1,
    )[:3]
    total = head + val
    if abserr > QUAD_EPSABS and abserr > 1e-6 * abs(total):
        raise QuadratureError(
            f"quadrature did not converge for user {l} at snr={snr!r} (abserr={abserr:.3g})", abserr
        )
    return _clamp(total, "quadrature outage")


# ---------------------------------------------------------------------------
# bounds, floors and asymptotics


def _union_prob(sc: SystemScenario, l: int, x_sr: float, x_l: float) -> float:
    f_sr = float(channel.cdf_first_hop(sc.hop1, x_sr))
    f_l = float(channel.cdf_ordered(sc.hop2, l, sc.L, x_l))
    return f_sr + f_l - f_sr * f_l


def op_bounds(sc: SystemScenario, snr: float, l: int):
    """Lower and upper bounds built from ``min`` of the two hop gains."""
    _check_user(sc, l)
    dt = decode_targets(sc, snr)
    mu = dt.mu[l - 1]
    if mu is None:
        return 1.0, 1.0
    lower = _union_prob(sc, l, dt.alpha2 * mu, dt.alpha1 * mu)
    upper = _union_prob(sc, l, 2 * dt.alpha2 * mu, 2 * dt.alpha1 * mu)
    return _clamp(lower, "lower bound"), _clamp(upper, "upper bound")


def error_floor(sc: SystemScenario, l: int):
    """SNR-independent outage floor bounds caused by estimation error."""
    _check_user(sc, l)
    _, zeta = _zetas(sc)
    z = zeta[l - 1]
    if z is None:
        return 1.0, 1.0
    esr, el = sc.hop1.sigma_e2, sc.hop2.sigma_e2
    if esr == 0 and el == 0:
        return 0.0, 0.0
    lower = _union_prob(sc, l, esr * z, el * z)
    upper = _union_prob(sc, l, 2 * esr * z, 2 * el * z)
    return lower, upper


def _require_perfect_csi(sc: SystemScenario) -> None:
    if sc.hop1.epsilon != 0 or sc.hop2.epsilon != 0:
        raise ValueError("asymptotic analysis needs epsilon = 0 on both hops; use error_floor() instead")


def asymptotic_terms(sc: SystemScenario, l: int):
    """Small-argument leading coefficients ``(tau1, A1, tau2, A2)``.

    ``F_sr(x) ~ A1 x^tau1`` and ``F_l(x) ~ A2 x^tau2`` as ``x -> 0``.
    """
    _check_user(sc, l)
    h1, h2 = sc.hop1, sc.hop2
    tau1 = h1.m * h1.n_t * h1.n_r
    tau2 = l * h2.m * h2.n_t * h2.n_r
    a1 = (h1.m / h1.omega) ** tau1 / math.factorial(h1.shape) ** h1.n_r
    lead = channel.order_coefficient(l, sc.L) / l
    a2 = lead * (h2.m / h2.omega) ** tau2 / math.factorial(h2.shape) ** (h2.n_r * l)
    return tau1, a1, tau2, a2


def diversity_array_gain(sc: SystemScenario, l: int):
    """``(diversity order, array gain)``; array gain is ``chi ** (1/tau)``."""
    _require_perfect_csi(sc)
    tau, chi = _chi(sc, l)
    return tau, chi ** (1.0 / tau)


def _chi(sc: SystemScenario, l: int):
    tau1, a1, tau2, a2 = asymptotic_terms(sc, l)
    if tau1 == tau2:
        return tau1, a1 + a2
    if tau1 > tau2:
        return tau2, a2
    return tau1, a1


def op_asymptotic(sc: SystemScenario, snr: float, l: int) -> float:
    """High-SNR outage ``chi * mu_l^tau`` for perfect channel estimates."""
    _require_perfect_csi(sc)
    dt = decode_targets(sc, snr)
    mu = dt.mu[l - 1]
    if mu is None:
        return 1.0
    tau, chi = _chi(sc, l)
    return chi * mu**tau


# ---------------------------------------------------------------------------
# OMA reference


def oma_threshold(thresholds: Sequence[float]) -> float:
    """Rate-matched OMA threshold ``prod(1 + g_i) - 1``."""
    if len(thresholds) < 1:
        raise ValueError("need at least one threshold")
    return math.prod(1.0 + float(g) for g in thresholds) - 1.0


def oma_scenario(sc: SystemScenario) -> SystemScenario:
    """Single-user, full-power link with the rate-matched threshold."""
    return SystemScenario(1, sc.hop1, sc.hop2, (1.0,), (oma_threshold(sc.thresholds),))


def op_oma(sc: SystemScenario, snr: float, method: str = "closed") -> float:
    """Outage of a user served alone in its own orthogonal slot."""
    single = oma_scenario(sc)
    if method == "closed":
        return op_closed_form(single, snr, 1)
    if method == "quadrature":
        return op_quadrature(single, snr, 1)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class OutageReport:
    user: int
    op_closed: float
    op_quadrature: float
    op_lower_bound: float
    op_upper_bound: float
    ef_lower: float
    ef_upper: float
    op_asymptotic: Optional[float] = None


def outage_report(sc: SystemScenario, snr: float):
    perfect = sc.hop1.epsilon == 0 and sc.hop2.epsilon == 0
    out = []
    for l in range(1, sc.L + 1):
        lo, up = op_bounds(sc, snr, l)
        efl, efu = error_floor(sc, l)
        out.append(
            OutageReport(
                user=l,
                op_closed=op_closed_form(sc, snr, l),
                op_quadrature=op_quadrature(sc, snr, l),
                op_lower_bound=lo,
                op_upper_bound=up,
                ef_lower=efl,
                ef_upper=efu,
                op_asymptotic=op_asymptotic(sc, snr, l) if perfect else None,
            )
        )
    return out


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)
