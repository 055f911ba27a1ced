"""Monte Carlo link-level simulation of the MRT/RAS AF NOMA downlink.

Each trial draws the estimated first-hop matrix and one second-hop matrix per
user, applies receive antenna selection, ranks users by their selected gain
and evaluates the exact SINR (with the averaged-beamformer factor ``W``) and
the upper-bound SINR (``W = 1``). OMA flags use the unranked users, each
served alone at full power with the rate-matched threshold.

Streams: batch ``b`` of a run with seed ``s`` draws from
``Generator(Philox(SeedSequence(s, spawn_key=(b,))))``. Counts for fixed
``(seed, trials, lanes)`` do not depend on execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analytic import SystemScenario, oma_threshold
from .channel import sample_gains

__all__ = [
    "TrialOutcome",
    "OutageEstimate",
    "make_rng",
    "sinr_exact",
    "sinr_upper",
    "snr_oma",
    "run_trial",
    "estimate_op",
    "estimate_op_grid",
]

CHUNK = 1 << 15
_MAX_COUNT = 2**63 - 1


def make_rng(seed: int, batch: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(batch),))
    return np.random.Generator(np.random.Philox(ss))


def _stage_terms(sc: SystemScenario, snr: float, w):
    el, esr = sc.hop2.sigma_e2, sc.hop1.sigma_e2
    a1 = snr * el * w + 1.0
    a2 = snr * esr + 1.0
    a3 = snr * snr * el * esr * w + snr * el * w + snr * esr + 1.0
    return a1, a2, a3


def _sigma(sc: SystemScenario, j: int) -> float:
    return math.fsum(sc.alloc[j:])


def sinr_exact(sc: SystemScenario, snr: float, phi_sr, phi_l, w_tilde, j: int):
    """SINR at a user with gain ``phi_l`` when decoding user ``j`` (1-based)."""
    a1, a2, a3 = _stage_terms(sc, snr, w_tilde)
    x = snr * snr * phi_sr * phi_l * w_tilde
    return sc.alloc[j - 1] * x / (x * _sigma(sc, j) + snr * phi_sr * a1 + snr * phi_l * a2 + a3)


def sinr_upper(sc: SystemScenario, snr: float, phi_sr, phi_l, j: int):
    return sinr_exact(sc, snr, phi_sr, phi_l, 1.0, j)


def snr_oma(sc: SystemScenario, snr: float, phi_sr, phi):
    a1, a2, a3 = _stage_terms(sc, snr, 1.0)
    x = snr * snr * phi_sr * phi
    return x / (snr * phi_sr * a1 + snr * phi * a2 + a3)


@dataclass
class _Draw:
    phi_sr: np.ndarray  # (n,)
    phi: np.ndarray  # (n, L) ascending
    phi_raw: np.ndarray  # (n, L) in user order
    w_tilde: np.ndarray  # (n,)


def _draw(rng: np.random.Generator, sc: SystemScenario, n: int) -> _Draw:
    h1, h2 = sc.hop1, sc.hop2
    g1 = sample_gains(rng, h1, (n, h1.n_t, h1.n_r))
    phi_sr = np.max(np.sum(g1.real**2 + g1.imag**2, axis=1), axis=1)

    g2 = sample_gains(rng, h2, (n, sc.L, h2.n_t, h2.n_r))
    norms = np.sum(g2.real**2 + g2.imag**2, axis=2)  # (n, L, n_r)
    sel = np.argmax(norms, axis=2)
    phi_raw = np.take_along_axis(norms, sel[..., None], axis=2)[..., 0]
    vec = np.take_along_axis(g2, sel[:, :, None, None], axis=3)[..., 0]  # (n, L, n_t)

    if sc.L == 1:
        w_tilde = np.ones(n)
    else:
        w = np.conj(vec) / np.sqrt(phi_raw)[..., None]
        avg = w.mean(axis=1)
        w_tilde = np.minimum(np.sum(avg.real**2 + avg.imag**2, axis=1), 1.0)
    phi = np.sort(phi_raw, axis=1)
    return _Draw(phi_sr, phi, phi_raw, w_tilde)


def _flags(sc: SystemScenario, snr: float, d: _Draw):
    n = d.phi_sr.shape[0]
    L = sc.L
    th = sc.thresholds
    ex = np.zeros((n, L), dtype=bool)
    up = np.zeros((n, L), dtype=bool)
    for l in range(1, L + 1):
        v = d.phi[:, l - 1]
        for j in range(1, l + 1):
            ex[:, l - 1] |= sinr_exact(sc, snr, d.phi_sr, v, d.w_tilde, j) < th[j - 1]
            up[:, l - 1] |= sinr_upper(sc, snr, d.phi_sr, v, j) < th[j - 1]
    g_oma = oma_threshold(th)
    oma = snr_oma(sc, snr, d.phi_sr[:, None], d.phi_raw) < g_oma
    return ex, up, oma


@dataclass(frozen=True)
class TrialOutcome:
    """One Monte Carlo draw.

    ``phi`` is ascending; ``outage_oma`` is indexed by unranked user.
    """

    phi_sr: float
    phi: tuple
    w_tilde: float
    outage_exact: tuple
    outage_upper: tuple
    outage_oma: tuple


def run_trial(rng: np.random.Generator, sc: SystemScenario, snr: float) -> TrialOutcome:
    d = _draw(rng, sc, 1)
    ex, up, oma = _flags(sc, snr, d)
    return TrialOutcome(
        phi_sr=float(d.phi_sr[0]),
        phi=tuple(float(v) for v in d.phi[0]),
        w_tilde=float(d.w_tilde[0]),
        outage_exact=tuple(bool(v) for v in ex[0]),
        outage_upper=tuple(bool(v) for v in up[0]),
        outage_oma=tuple(bool(v) for v in oma[0]),
    )


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    trials: int
    ci_halfwidth: float
    seed: int
    batches: int
    count: int

    @classmethod
    def from_count(cls, count: int, trials: int, seed: int, batches: int) -> "OutageEstimate":
        p = count / trials
        return cls(p, trials, 3.0 * math.sqrt(p * (1.0 - p) / trials), seed, batches, count)

    def covers(self, p: float, sigmas: float = 3.0) -> bool:
        """Two-sided z-test of ``p`` with the standard error taken at ``p``."""
        return abs(self.p_hat - p) <= sigmas * math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)


def _batch_sizes(trials: int, lanes: int):
    base, extra = divmod(trials, lanes)
    return [base + (1 if b < extra else 0) for b in range(lanes)]


def _run_batch(args):
    sc, snrs, n, seed, batch = args
    rng = make_rng(seed, batch)
    L = sc.L
    counts = np.zeros((len(snrs), 3, L), dtype=np.int64)
    w_sum = 0.0
    done = 0
    while done < n:
        k = min(CHUNK, n - done)
        d = _draw(rng, sc, k)
        w_sum += float(np.sum(d.w_tilde))
        for i, snr in enumerate(snrs):
            ex, up, oma = _flags(sc, snr, d)
            counts[i, 0] += ex.sum(axis=0)
            counts[i, 1] += up.sum(axis=0)
            counts[i, 2] += oma.sum(axis=0)
        done += k
    return counts, w_sum


def estimate_op_grid(
    sc: SystemScenario,
    snrs: Sequence[float],
    trials: int,
    seed: int,
    lanes: int = 1,
    workers: int = 1,
):
    """Outage estimates at several SNRs from one shared set of channel draws.

    Returns ``{snr: [(exact, upper, oma) for each user]}``. Reusing the same
    draws across SNR points keeps curves smooth; every point is still an
    honest ``trials``-sample estimate.
    """
    if trials < 1 or lanes < 1:
        raise ValueError("trials and lanes must be positive")
    if trials * sc.L > _MAX_COUNT:
        raise OverflowError("trials * L exceeds the 64-bit counter range")
    snrs = [float(s) for s in snrs]
    jobs = [(sc, snrs, n, seed, b) for b, n in enumerate(_batch_sizes(trials, lanes)) if n > 0]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_batch, jobs))
    else:
        results = [_run_batch(j) for j in jobs]
    counts = sum(r[0] for r in results)
    out = {}
    for i, snr in enumerate(snrs):
        per_user = []
        for l in range(sc.L):
            per_user.append(
                tuple(
                    OutageEstimate.from_count(int(counts[i, kind, l]), trials, seed, lanes)
                    for kind in range(3)
                )
            )
        out[snr] = per_user
    return out


def estimate_op(sc: SystemScenario, snr: float, trials: int, seed: int, lanes: int = 1, workers: int = 1):
    """Per-user ``(exact, upper, oma)`` outage estimates at one SNR."""
    return estimate_op_grid(sc, [snr], trials, seed, lanes, workers)[float(snr)]


def mean_w_tilde(sc: SystemScenario, trials: int, seed: int, lanes: int = 1) -> float:
    jobs = [(sc, [], n, seed, b) for b, n in enumerate(_batch_sizes(trials, lanes)) if n > 0]
    return sum(_run_batch(j)[1] for j in jobs) / trials
