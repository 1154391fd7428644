"""Operating-point lookup table of tuned MPC parameters.

Entries are keyed by (forward speed, lateral offset).  Selection is nearest
neighbour in a key space where each axis is divided by its grid span; the
:class:`Scheduler` adds hysteresis and a minimum dwell time so parameters do
not chatter between neighbouring entries.

Table document (JSON)::

    {
      "schema_version": 1,
      "vehicle_hash": "<16 hex chars>",
      "grid": {"speeds": [...], "offsets": [...]},
      "entries": [
        {"long_vel": 9.0, "lateral_offset": 4.0,
         "params": {"np": 45, "nc": 15, "q_y": 10.0, "r": 0.01,
                    "laguerre_n": 5, "laguerre_alpha": 0.75},
         "fitness": 0.12, "seed": 0, "timestamp": null}
      ]
    }
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

from .mpc import MpcConfig
from .vehicle import VehicleParams

SCHEMA_VERSION = 1
SPEED_RANGE = (3.0, 27.0)
OFFSET_RANGE = (-15.0, 15.0)
DEFAULT_SPEEDS = (3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0)
DEFAULT_OFFSETS = (0.0, 2.0, 4.0, 8.0, 15.0)


class TableError(ValueError):
    pass


@dataclass(frozen=True)
class TunedParams:
    pred_horizon: int
    ctrl_horizon: int
    weight_track: float
    weight_ctrl: float
    laguerre_terms: int
    laguerre_scale: float

    def apply(self, base: MpcConfig) -> MpcConfig:
        return base.with_tuning(**dataclasses.asdict(self))

    @classmethod
    def from_config(cls, cfg: MpcConfig) -> "TunedParams":
        return cls(cfg.pred_horizon, cfg.ctrl_horizon, cfg.weight_track, cfg.weight_ctrl,
                   cfg.laguerre_terms, cfg.laguerre_scale)

    def to_doc(self) -> dict:
        return {"np": self.pred_horizon, "nc": self.ctrl_horizon, "q_y": self.weight_track,
                "r": self.weight_ctrl, "laguerre_n": self.laguerre_terms, "laguerre_alpha": self.laguerre_scale}

    @classmethod
    def from_doc(cls, doc: dict) -> "TunedParams":
        return cls(int(doc["np"]), int(doc["nc"]), float(doc["q_y"]), float(doc["r"]),
                   int(doc["laguerre_n"]), float(doc["laguerre_alpha"]))


@dataclass(frozen=True)
class TableEntry:
    long_vel: float
    lateral_offset: float
    params: TunedParams
    fitness: float
    seed: int | None = None
    timestamp: str | None = None

    @property
    def key(self) -> tuple[float, float]:
        return (self.long_vel, self.lateral_offset)


@dataclass(frozen=True)
class LookupTable:
    entries: tuple[TableEntry, ...]
    speeds: tuple[float, ...]
    offsets: tuple[float, ...]
    vehicle_hash: str = ""

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "speeds", tuple(float(v) for v in self.speeds))
        object.__setattr__(self, "offsets", tuple(float(v) for v in self.offsets))
        validate_table(self)


def vehicle_hash(params: VehicleParams) -> str:
    text = json.dumps(dataclasses.asdict(params), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def validate_table(table: LookupTable):
    if not table.entries:
        raise TableError("table must contain at least one entry")
    if not table.speeds or not table.offsets:
        raise TableError("grid must list at least one speed and one offset")
    seen = set()
    for i, entry in enumerate(table.entries):
        where = f"entries[{i}]"
        if entry.key in seen:
            raise TableError(f"{where}: duplicate key {entry.key}")
        seen.add(entry.key)
        if not SPEED_RANGE[0] <= entry.long_vel <= SPEED_RANGE[1]:
            raise TableError(f"{where}.long_vel={entry.long_vel} outside {SPEED_RANGE}")
        if not OFFSET_RANGE[0] <= entry.lateral_offset <= OFFSET_RANGE[1]:
            raise TableError(f"{where}.lateral_offset={entry.lateral_offset} outside {OFFSET_RANGE}")
        try:
            entry.params.apply(MpcConfig())
        except ValueError as exc:
            raise TableError(f"{where}.params: {exc}") from None


def _span(axis) -> float:
    span = max(axis) - min(axis)
    return span if span > 0 else 1.0


def _distance(table: LookupTable, entry: TableEntry, long_vel: float, offset: float) -> float:
    dv = (entry.long_vel - long_vel) / _span(table.speeds)
    do = (entry.lateral_offset - offset) / _span(table.offsets)
    return math.hypot(dv, do)


def _clamp_query(table: LookupTable, long_vel: float, offset: float) -> tuple[float, float]:
    v = min(max(long_vel, min(table.speeds)), max(table.speeds))
    o = min(max(offset, min(table.offsets)), max(table.offsets))
    return v, o


def lookup(table: LookupTable, long_vel: float, lateral_offset: float,
           incumbent: TableEntry | None = None, hysteresis: float = 0.1) -> TableEntry:
    """Nearest entry to the clamped query.

    Ties go to the lower speed key, then the lower offset key.  With an
    ``incumbent``, a different entry wins only if its distance is below
    ``(1 - hysteresis)`` times the incumbent's.
    """
    v, o = _clamp_query(table, long_vel, lateral_offset)
    best = min(table.entries, key=lambda e: (_distance(table, e, v, o), e.long_vel, e.lateral_offset))
    if incumbent is None or best == incumbent:
        return best
    if _distance(table, best, v, o) < (1.0 - hysteresis) * _distance(table, incumbent, v, o):
        return best
    return incumbent


class Scheduler:
    """Online parameter selection with hysteresis and minimum dwell time."""

    def __init__(self, table: LookupTable, hysteresis: float = 0.1, min_dwell: float = 0.5):
        self.table = table
        self.hysteresis = hysteresis
        self.min_dwell = min_dwell
        self.current: TableEntry | None = None
        self.switched_at = -math.inf

    def select(self, t: float, long_vel: float, lateral_offset: float) -> TableEntry:
        if self.current is not None and t - self.switched_at < self.min_dwell - 1e-9:
            return self.current
        entry = lookup(self.table, long_vel, lateral_offset, self.current, self.hysteresis)
        if entry != self.current:
            self.current, self.switched_at = entry, t
        return entry


def table_to_doc(table: LookupTable) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "vehicle_hash": table.vehicle_hash,
        "grid": {"speeds": list(table.speeds), "offsets": list(table.offsets)},
        "entries": [
            {"long_vel": e.long_vel, "lateral_offset": e.lateral_offset, "params": e.params.to_doc(),
             "fitness": e.fitness, "seed": e.seed, "timestamp": e.timestamp}
            for e in table.entries
        ],
    }


def table_from_doc(doc: dict) -> LookupTable:
    if not isinstance(doc, dict):
        raise TableError("table document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise TableError(f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})")
    entries = []
    for i, raw in enumerate(doc.get("entries") or []):
        try:
            entries.append(TableEntry(
                long_vel=float(raw["long_vel"]),
                lateral_offset=float(raw["lateral_offset"]),
                params=TunedParams.from_doc(raw["params"]),
                fitness=float(raw["fitness"]),
                seed=raw.get("seed"),
                timestamp=raw.get("timestamp"),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise TableError(f"entries[{i}]: bad or missing field {exc}") from None
    grid = doc.get("grid") or {}
    speeds = grid.get("speeds") or sorted({e.long_vel for e in entries})
    offsets = grid.get("offsets") or sorted({e.lateral_offset for e in entries})
    return LookupTable(tuple(entries), tuple(speeds), tuple(offsets), str(doc.get("vehicle_hash", "")))


def save_table(table: LookupTable, destination):
    with open(destination, "w") as fh:
        json.dump(table_to_doc(table), fh, indent=2)
        fh.write("\n")


def load_table(source) -> LookupTable:
    with open(source) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return table_from_doc(doc)
