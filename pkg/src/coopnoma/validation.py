"""Three-way cross-check: closed form, quadrature and Monte Carlo."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

from . import analytic, simulator
from .analytic import make_scenario

# (antennas (N_t1, N_r1, N_t2, N_r2), (m1, m2)) appearing in the figure presets
FIGURE_CONFIGS = (
    ((1, 1, 1, 1), (1, 1)),
    ((1, 2, 1, 2), (1, 1)),
    ((2, 2, 2, 2), (1, 1)),
    ((1, 2, 1, 2), (1, 2)),
    ((1, 2, 1, 2), (2, 1)),
    ((1, 2, 1, 2), (2, 2)),
    ((2, 2, 2, 2), (2, 1)),
)
ANALYTIC_SNR_DB = tuple(float(v) for v in range(0, 41, 5))
ANALYTIC_EPSILONS = (0.0, 0.005, 0.05)
MC_SNR_DB = (0.0, 10.0, 20.0, 30.0)
MC_EPSILON = 0.005

CLOSED_VS_QUAD_RTOL = 1e-6
QUAD_FLOOR = 1e-12
SANDWICH_SLACK = 1e-12


def config_name(antennas, m, eps) -> str:
    a = antennas
    return f"N=({a[0]},{a[1]};{a[2]},{a[3]}) m=({m[0]},{m[1]}) eps={eps:g}"


def scenario_for(antennas, m, eps):
    return make_scenario(*antennas, m[0], m[1], eps_sr=eps, eps_l=eps)


@dataclass
class ValidationReport:
    points: int = 0
    max_rel_closed_quad: float = 0.0
    sandwich_violations: int = 0
    mc_points: int = 0
    mc_covered: int = 0
    max_mc_z: float = 0.0
    max_exact_gap: float = 0.0
    offenders: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.offenders

    def lines(self):
        out = [
            f"closed vs quadrature: {self.points} points, max relative error {self.max_rel_closed_quad:.3e}"
            f" (limit {CLOSED_VS_QUAD_RTOL:g})",
            f"bound sandwich: {self.sandwich_violations} violations",
        ]
        if self.mc_points:
            out.append(
                f"monte carlo (upper-bound SINR): {self.mc_covered}/{self.mc_points} within 3 sigma,"
                f" max |z| {self.max_mc_z:.2f}"
            )
            out.append(f"monte carlo (exact SINR, informational): max relative gap {self.max_exact_gap:.3e}")
        else:
            out.append("monte carlo: skipped (trials = 0)")
        for o in self.offenders:
            out.append(f"FAIL {o}")
        out.append("PASS" if self.ok else "FAIL")
        return out


def check_analytic(report: ValidationReport, configs, snrs_db, epsilons, users=None) -> None:
    for antennas, m in configs:
        for eps in epsilons:
            sc = scenario_for(antennas, m, eps)
            name = config_name(antennas, m, eps)
            for db in snrs_db:
                snr = 10.0 ** (db / 10.0)
                for l in users or range(1, sc.L + 1):
                    closed = analytic.op_closed_form(sc, snr, l)
                    quad = analytic.op_quadrature(sc, snr, l)
                    lo, up = analytic.op_bounds(sc, snr, l)
                    report.points += 1
                    where = f"{name} snr={db:g}dB user={l}"
                    if quad >= QUAD_FLOOR:
                        rel = abs(closed - quad) / quad
                        report.max_rel_closed_quad = max(report.max_rel_closed_quad, rel)
                        if not rel <= CLOSED_VS_QUAD_RTOL:
                            report.offenders.append(f"{where}: closed {closed:.10e} vs quadrature {quad:.10e} (rel {rel:.2e})")
                    if not lo - SANDWICH_SLACK <= quad <= up + SANDWICH_SLACK:
                        report.sandwich_violations += 1
                        report.offenders.append(f"{where}: bounds [{lo:.6e}, {up:.6e}] miss quadrature {quad:.6e}")


def check_monte_carlo(report: ValidationReport, configs, snrs_db, eps, trials, seed, lanes=1) -> None:
    for i, (antennas, m) in enumerate(configs):
        sc = scenario_for(antennas, m, eps)
        name = config_name(antennas, m, eps)
        snrs = [10.0 ** (db / 10.0) for db in snrs_db]
        # distinct streams per configuration keep the checks independent
        grid = simulator.estimate_op_grid(sc, snrs, trials, seed + i, lanes)
        for db, snr in zip(snrs_db, snrs):
            for l in range(1, sc.L + 1):
                ex, up, _ = grid[snr][l - 1]
                p = analytic.op_closed_form(sc, snr, l)
                report.mc_points += 1
                sd = math.sqrt(max(p * (1.0 - p), 0.0) / trials)
                z = abs(up.p_hat - p) / sd if sd > 0 else (0.0 if up.p_hat == p else math.inf)
                report.max_mc_z = max(report.max_mc_z, z)
                if up.covers(p):
                    report.mc_covered += 1
                else:
                    report.offenders.append(
                        f"{name} snr={db:g}dB user={l}: monte carlo {up.p_hat:.6e} vs closed {p:.6e} (|z| {z:.2f})"
                    )
                if p >= 1e-4:
                    report.max_exact_gap = max(report.max_exact_gap, abs(ex.p_hat - p) / p)


def validate(
    trials: int = 1_000_000,
    seed: int = 0,
    lanes: int = 1,
    configs=FIGURE_CONFIGS,
    snrs_db=ANALYTIC_SNR_DB,
    epsilons=ANALYTIC_EPSILONS,
    mc_snrs_db=MC_SNR_DB,
    stream=None,
) -> int:
    """Run the checks, print the report and return the exit code (0 or 2).

    The exact-SINR Monte Carlo gap is reported but not gated on.
    """
    stream = stream or sys.stdout
    report = ValidationReport()
    check_analytic(report, configs, snrs_db, epsilons)
    if trials > 0:
        check_monte_carlo(report, configs, mc_snrs_db, MC_EPSILON, trials, seed, lanes)
    for line in report.lines():
        print(line, file=stream)
    return 0 if report.ok else 2
