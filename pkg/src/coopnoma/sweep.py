"""Parameter sweeps producing one CSV row per (axis point, user)."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import replace

from . import analytic, simulator
from .analytic import SystemScenario
from .channel import make_hop_stats
from .config import SweepSpec

COLUMNS = (
    "curve",
    "axis_value",
    "user",
    "op_closed",
    "op_quadrature",
    "op_lower",
    "op_upper",
    "ef_lower",
    "ef_upper",
    "op_asymptotic",
    "op_mc_exact",
    "op_mc_upper",
    "op_oma",
    "ci_halfwidth",
    "trials",
    "seed",
    "warnings",
)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _hop_like(h, **kw):
    args = dict(d=h.d, alpha=h.alpha, epsilon=h.epsilon, m=h.m, n_t=h.n_t, n_r=h.n_r)
    args.update(kw)
    return make_hop_stats(**args)


def scenario_at(spec: SweepSpec, value: float) -> tuple:
    """Scenario and linear SNR at one axis point."""
    sc = spec.scenario
    if spec.axis == "snr_db":
        return sc, db_to_linear(value)
    snr = db_to_linear(spec.snr_db)
    if spec.axis == "d1":
        return sc.with_hops(_hop_like(sc.hop1, d=value), _hop_like(sc.hop2, d=1.0 - value)), snr
    return sc.with_hops(_hop_like(sc.hop1, epsilon=value), _hop_like(sc.hop2, epsilon=value)), snr


def _analytic_cells(sc: SystemScenario, snr: float, l: int, outputs) -> dict:
    row = {}
    if "closed" in outputs:
        row["op_closed"] = analytic.op_closed_form(sc, snr, l)
    if "quadrature" in outputs:
        row["op_quadrature"] = analytic.op_quadrature(sc, snr, l)
    if "bounds" in outputs:
        row["op_lower"], row["op_upper"] = analytic.op_bounds(sc, snr, l)
    if "floor" in outputs:
        row["ef_lower"], row["ef_upper"] = analytic.error_floor(sc, l)
    if "asymptotic" in outputs and sc.hop1.epsilon == 0 and sc.hop2.epsilon == 0:
        row["op_asymptotic"] = analytic.op_asymptotic(sc, snr, l)
    if "oma" in outputs:
        row["op_oma"] = analytic.op_oma(sc, snr)
    return row


def run_sweep(spec: SweepSpec) -> list:
    """Evaluate every requested output along the sweep axis.

    ``ci_halfwidth`` belongs to ``op_mc_upper``. Numerical warnings raised
    while filling a row go to its ``warnings`` cell.
    """
    want_mc = spec.trials > 0 and ({"mc_exact", "mc_upper"} & spec.outputs)
    mc = {}
    if want_mc:
        if spec.axis == "snr_db":
            snrs = [db_to_linear(v) for v in spec.points]
            grid = simulator.estimate_op_grid(spec.scenario, snrs, spec.trials, spec.seed, spec.lanes)
            mc = {v: grid[s] for v, s in zip(spec.points, snrs)}
        else:
            for v in spec.points:
                sc, snr = scenario_at(spec, v)
                mc[v] = simulator.estimate_op(sc, snr, spec.trials, spec.seed, spec.lanes)

    rows = []
    for v in spec.points:
        sc, snr = scenario_at(spec, v)
        for l in spec.users:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", analytic.NumericalInstabilityWarning)
                row = {"curve": spec.label, "axis_value": v, "user": l}
                row.update(_analytic_cells(sc, snr, l, spec.outputs))
            if want_mc:
                ex, up, _ = mc[v][l - 1]
                if "mc_exact" in spec.outputs:
                    row["op_mc_exact"] = ex.p_hat
                if "mc_upper" in spec.outputs:
                    row["op_mc_upper"] = up.p_hat
                row["ci_halfwidth"] = up.ci_halfwidth
                row["trials"] = spec.trials
                row["seed"] = spec.seed
            row["warnings"] = "; ".join(sorted({str(w.message) for w in caught}))
            rows.append(row)
    rows.sort(key=lambda r: (r["axis_value"], r["user"]))
    return rows


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def write_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def relabel(spec: SweepSpec, label: str) -> SweepSpec:
    return replace(spec, label=label)
