"""JSON configuration loading and sweep descriptions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema

from .analytic import DEFAULT_ALLOC, DEFAULT_THRESHOLDS, SystemScenario
from .channel import make_hop_stats

AXES = ("snr_db", "d1", "epsilon")
OUTPUTS = ("closed", "quadrature", "bounds", "floor", "asymptotic", "mc_exact", "mc_upper", "oma")

DEFAULT_EPSILON = 0.005
DEFAULT_SNR_DB = tuple(float(v) for v in range(0, 41, 5))

_HOP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "m": {"type": "integer", "minimum": 1},
        "nt": {"type": "integer", "minimum": 1},
        "nr": {"type": "integer", "minimum": 1},
        "d": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "users": {"type": "integer", "minimum": 1},
        "alloc": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "thresholds": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "hop1": _HOP_SCHEMA,
        "hop2": _HOP_SCHEMA,
        "path_loss_alpha": {"type": "number", "exclusiveMinimum": 0},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "axis": {"enum": list(AXES)},
                "points": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                "snr_db": {"type": "number"},
                "trials": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "lanes": {"type": "integer", "minimum": 1},
                "outputs": {"type": "array", "items": {"enum": list(OUTPUTS)}},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and which columns to fill.

    ``snr_db`` is the fixed operating point for the ``d1`` and ``epsilon``
    axes. On the ``d1`` axis the relay sits on a unit segment, ``d2 = 1 - d1``.
    """

    axis: str
    points: tuple
    scenario: SystemScenario
    trials: int = 0
    seed: int = 0
    outputs: frozenset = field(default_factory=lambda: frozenset(OUTPUTS))
    snr_db: float = 10.0
    lanes: int = 1
    users: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"sweep.axis: unknown axis {self.axis!r}")
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ConfigError("sweep.points: at least one point required")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError("sweep.points: must be strictly increasing")
        if self.axis == "d1" and any(not 0 < p < 1 for p in pts):
            raise ConfigError("sweep.points: d1 values must lie in (0, 1)")
        if self.axis == "epsilon" and any(not 0 <= p < 1 for p in pts):
            raise ConfigError("sweep.points: epsilon values must lie in [0, 1)")
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise ConfigError(f"sweep.outputs: unknown outputs {sorted(bad)}")
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        users = tuple(self.users) or tuple(range(1, self.scenario.L + 1))
        if any(not 1 <= u <= self.scenario.L for u in users):
            raise ConfigError(f"user index out of range 1..{self.scenario.L}")
        object.__setattr__(self, "users", users)

    def with_(self, **kw) -> "SweepSpec":
        return replace(self, **kw)


def scenario_from_dict(cfg: dict) -> SystemScenario:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None

    alloc = cfg.get("alloc")
    thresholds = cfg.get("thresholds")
    users = cfg.get("users")
    if users is None:
        users = len(alloc) if alloc is not None else len(thresholds) if thresholds is not None else 3
    if alloc is None:
        if users != len(DEFAULT_ALLOC):
            raise ConfigError("alloc: required when users != 3")
        alloc = DEFAULT_ALLOC
    if thresholds is None:
        if users != len(DEFAULT_THRESHOLDS):
            raise ConfigError("thresholds: required when users != 3")
        thresholds = DEFAULT_THRESHOLDS
    if len(alloc) != users:
        raise ConfigError(f"alloc: expected {users} entries, got {len(alloc)}")
    if len(thresholds) != users:
        raise ConfigError(f"thresholds: expected {users} entries, got {len(thresholds)}")

    alpha = cfg.get("path_loss_alpha", 4.0)
    hops = []
    for key in ("hop1", "hop2"):
        h = cfg.get(key, {})
        try:
            hops.append(
                make_hop_stats(
                    h.get("d", 0.5), alpha, h.get("epsilon", DEFAULT_EPSILON), h.get("m", 1), h.get("nt", 1), h.get("nr", 1)
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    try:
        return SystemScenario(users, hops[0], hops[1], tuple(alloc), tuple(thresholds))
    except ValueError as exc:
        raise ConfigError(f"alloc/thresholds: {exc}") from None


def spec_from_dict(cfg: dict, scenario: SystemScenario) -> SweepSpec:
    sw = cfg.get("sweep", {})
    axis = sw.get("axis", "snr_db")
    points = sw.get("points")
    if points is None:
        points = DEFAULT_SNR_DB if axis == "snr_db" else tuple(round(0.1 * k, 10) for k in range(1, 10))
    if axis == "epsilon" and "points" not in sw:
        points = (0.0, 0.001, 0.005, 0.01, 0.05)
    return SweepSpec(
        axis=axis,
        points=tuple(points),
        scenario=scenario,
        trials=sw.get("trials", 0),
        seed=sw.get("seed", 0),
        outputs=frozenset(sw.get("outputs", OUTPUTS)),
        snr_db=sw.get("snr_db", 10.0),
        lanes=sw.get("lanes", 1),
    )


def load_config(path) -> tuple:
    """Read a JSON config file; returns ``(scenario, sweep_spec)``."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("<root>: config must be a JSON object")
    sc = scenario_from_dict(cfg)
    return sc, spec_from_dict(cfg, sc)
