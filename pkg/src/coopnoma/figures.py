"""Figure presets for the reference experiments, with CSV + SVG output."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analytic import make_scenario  # noqa: E402
from .config import DEFAULT_SNR_DB, SweepSpec  # noqa: E402
from .sweep import COLUMNS, rows_to_csv, run_sweep  # noqa: E402

FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")

# (N_t1, N_r1, N_t2, N_r2) used where a figure compares "different antenna configurations"
ANTENNA_SETS = ((1, 1, 1, 1), (1, 2, 1, 2), (2, 2, 2, 2))
EPSILON = 0.005
FIG6_D1 = tuple(round(0.05 * k, 10) for k in range(2, 19))
HIGH_SNR_DB = tuple(float(v) for v in range(0, 61, 5))


@dataclass(frozen=True)
class Curve:
    label: str
    antennas: tuple
    m: tuple
    epsilon: float


@dataclass(frozen=True)
class FigurePreset:
    id: str
    title: str
    axis: str
    points: tuple
    curves: tuple
    snr_db: float = 10.0
    outputs: frozenset = frozenset({"closed", "quadrature", "bounds", "floor", "asymptotic", "mc_exact", "mc_upper", "oma"})


def _label(ant, m, eps):
    return f"N=({ant[0]},{ant[1]};{ant[2]},{ant[3]}) m=({m[0]},{m[1]}) eps={eps:g}"


def _curves(items):
    return tuple(Curve(_label(a, m, e), a, m, e) for a, m, e in items)


PRESETS = {
    "fig2": FigurePreset(
        "fig2",
        "OP vs SNR, (m1,m2)=(1,1), eps=0.005",
        "snr_db",
        DEFAULT_SNR_DB,
        _curves((a, (1, 1), EPSILON) for a in ANTENNA_SETS),
    ),
    "fig3": FigurePreset(
        "fig3",
        "OP vs SNR, N=(1,2;1,2), eps=0.005",
        "snr_db",
        DEFAULT_SNR_DB,
        _curves(((1, 2, 1, 2), m, EPSILON) for m in ((1, 1), (1, 2), (2, 1), (2, 2))),
    ),
    "fig4": FigurePreset(
        "fig4",
        "OP vs SNR, N=(2,2;2,2), (m1,m2)=(1,1), varying eps",
        "snr_db",
        DEFAULT_SNR_DB,
        _curves(((2, 2, 2, 2), (1, 1), e) for e in (0.0, 0.005, 0.01, 0.05)),
    ),
    "fig5": FigurePreset(
        "fig5",
        "OP vs SNR, (m1,m2)=(1,1), error floors",
        "snr_db",
        HIGH_SNR_DB,
        _curves((a, (1, 1), e) for a in ((1, 1, 1, 1), (2, 2, 2, 2)) for e in (0.001, EPSILON, 0.01)),
    ),
    "fig6": FigurePreset(
        "fig6",
        "OP vs d1 at 10 dB, N=(2,2;2,2), eps=0.005",
        "d1",
        FIG6_D1,
        _curves(((2, 2, 2, 2), m, EPSILON) for m in ((1, 1), (2, 1))),
        snr_db=10.0,
    ),
    "fig7": FigurePreset(
        "fig7",
        "OP vs SNR, (m1,m2)=(1,1), eps=0",
        "snr_db",
        HIGH_SNR_DB,
        _curves((a, (1, 1), 0.0) for a in ANTENNA_SETS),
    ),
}


def preset_specs(preset: FigurePreset, trials: int = 0, seed: int = 0, lanes: int = 1, users=()):
    specs = []
    for i, c in enumerate(preset.curves):
        n_t1, n_r1, n_t2, n_r2 = c.antennas
        sc = make_scenario(n_t1, n_r1, n_t2, n_r2, c.m[0], c.m[1], eps_sr=c.epsilon, eps_l=c.epsilon)
        specs.append(
            SweepSpec(
                axis=preset.axis,
                points=preset.points,
                scenario=sc,
                trials=trials,
                seed=seed + i,
                outputs=preset.outputs,
                snr_db=preset.snr_db,
                lanes=lanes,
                users=tuple(users),
                label=c.label,
            )
        )
    return specs


def run_preset(preset: FigurePreset, trials: int = 0, seed: int = 0, lanes: int = 1, users=()):
    rows = []
    for spec in preset_specs(preset, trials, seed, lanes, users):
        rows.extend(run_sweep(spec))
    return rows


_AXIS_LABEL = {"snr_db": "SNR (dB)", "d1": "normalized distance d1", "epsilon": "relative CEE eps"}


def plot_rows(preset: FigurePreset, rows, path) -> None:
    """Static log-scale SVG, one series per (curve, user, method)."""
    plt.rcParams["svg.hashsalt"] = "coopnoma"
    fig, ax = plt.subplots(figsize=(8, 6))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    series = {}
    for r in rows:
        series.setdefault((r["curve"], r["user"]), []).append(r)
    methods = (
        ("op_closed", "-", None, "closed form"),
        ("op_mc_exact", "", "o", "MC exact"),
        ("op_mc_upper", "", "x", "MC upper"),
        ("op_asymptotic", "--", None, "asymptotic"),
        ("ef_lower", ":", None, "EF lower"),
        ("op_oma", "-.", None, "OMA"),
    )
    oma_done = set()
    for i, ((curve, user), rs) in enumerate(sorted(series.items())):
        color = colors[i % len(colors)]
        xs = [r["axis_value"] for r in rs]
        for key, ls, marker, name in methods:
            pts = [(x, r.get(key)) for x, r in zip(xs, rs) if r.get(key) not in (None, "") and r.get(key) > 0]
            if not pts:
                continue
            if key == "op_oma":
                if curve in oma_done:
                    continue
                oma_done.add(curve)
                lab = f"{curve} {name}"
            elif key == "ef_lower" and preset.axis != "snr_db":
                continue
            else:
                lab = f"{curve} U{user} {name}"
            ax.plot(
                [p[0] for p in pts],
                [p[1] for p in pts],
                linestyle=ls or "none",
                marker=marker,
                color="k" if key == "op_oma" else color,
                linewidth=1.0,
                markersize=4,
                label=lab,
            )
    ax.set_yscale("log")
    ax.set_xlabel(_AXIS_LABEL[preset.axis])
    ax.set_ylabel("outage probability")
    ax.set_title(preset.title)
    ax.grid(True, which="both", linewidth=0.3)
    ax.legend(fontsize=5, ncol=2)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_figure(fig_id: str, out_dir, trials: int = 0, seed: int = 0, lanes: int = 1):
    """Write ``<id>.csv`` and ``<id>.svg`` into ``out_dir``; returns both paths."""
    if fig_id not in PRESETS:
        raise KeyError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURE_IDS)}")
    preset = PRESETS[fig_id]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_preset(preset, trials, seed, lanes)
    csv_path = out / f"{fig_id}.csv"
    svg_path = out / f"{fig_id}.svg"
    csv_path.write_text(rows_to_csv(rows), encoding="utf-8")
    plot_rows(preset, rows, svg_path)
    return csv_path, svg_path


__all__ = ["FIGURE_IDS", "PRESETS", "FigurePreset", "Curve", "preset_specs", "run_preset", "emit_figure", "COLUMNS"]
