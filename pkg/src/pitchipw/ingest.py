"""Parse pitch-by-pitch CSV exports, classify catcher demands, build the analysis set."""

from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .codes import EventCode, is_terminal
from .errors import BadValue, EmptyFile, MissingColumn, OutOfCanvas

log = logging.getLogger(__name__)

CANVAS_PX = (160, 200)
CANVAS_CM = (100.0, 125.0)  # physical size of the demand canvas
INSIDE_MIN_X = 96  # right-handed batter; mirrored about x = 80 for lefties
OUTSIDE_MAX_X = 64
TOP_MAX_Y = 80

FOUR_SEAM = "four_seam"


class DemandZone(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    EXCLUDED = "excluded"


@dataclass(frozen=True, slots=True)
class PitchEvent:
    game_id: str
    date: date
    inning: int
    half: str
    pitcher_id: str
    batter_id: str
    catcher_id: str
    balls: int
    strikes: int
    outs: int
    on_first: bool
    on_second: bool
    on_third: bool
    run_diff: int
    pitch_seq_no: int
    pitcher_total_pitches: int
    pitch_type: str
    pitch_speed: float | None
    demand_x: float
    demand_y: float
    actual_x: float | None
    actual_y: float | None
    pitcher_hand: str
    batter_hand: str
    outcome: EventCode
    runs_scored_on_play: int

    @property
    def bases(self) -> tuple[bool, bool, bool]:
        return (self.on_first, self.on_second, self.on_third)


FIELD_NAMES = tuple(f.name for f in fields(PitchEvent))
OPTIONAL_FIELDS = frozenset({"pitch_speed", "actual_x", "actual_y"})

# Identity mapping: PitchEvent field -> CSV column. Override entries to load
# third-party exports with different headers.
DEFAULT_SCHEMA = {name: name for name in FIELD_NAMES}


@dataclass
class RejectedRow:
    line: int
    reason: str


@dataclass
class ParseResult:
    events: list[PitchEvent]
    rejected: list[RejectedRow]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "t", "yes", "y"):
        return True
    if t in ("0", "false", "f", "no", "n", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_in(text: str, lo: int, hi: int | None, name: str) -> int:
    value = int(text)
    if value < lo or (hi is not None and value > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise ValueError(f"{name}={value} outside {bound}")
    return value


def _optional_float(text: str) -> float | None:
    t = text.strip()
    if t == "" or t.lower() in ("na", "nan", "null", "none"):
        return None
    return float(t)


def normalize_pitch_type(text: str) -> str:
    return text.strip().lower().replace("-", "_").replace(" ", "_")


def _hand(text: str, name: str) -> str:
    h = text.strip().upper()
    if h not in ("L", "R"):
        raise ValueError(f"{name} must be L or R, got {text!r}")
    return h


def _parse_row(raw: dict[str, str]) -> PitchEvent:
    half = raw["half"].strip().lower()
    if half not in ("top", "bottom"):
        raise ValueError(f"half must be top|bottom, got {raw['half']!r}")
    demand_x = float(raw["demand_x"])
    demand_y = float(raw["demand_y"])
    if not (0 <= demand_x <= CANVAS_PX[0] and 0 <= demand_y <= CANVAS_PX[1]):
        raise ValueError(f"demand ({demand_x}, {demand_y}) outside canvas")
    speed = _optional_float(raw["pitch_speed"])
    if speed is not None and not np.isfinite(speed):
        speed = None
    return PitchEvent(
        game_id=raw["game_id"].strip(),
        date=date.fromisoformat(raw["date"].strip()),
        inning=_int_in(raw["inning"], 1, None, "inning"),
        half=half,
        pitcher_id=raw["pitcher_id"].strip(),
        batter_id=raw["batter_id"].strip(),
        catcher_id=raw["catcher_id"].strip(),
        balls=_int_in(raw["balls"], 0, 3, "balls"),
        strikes=_int_in(raw["strikes"], 0, 2, "strikes"),
        outs=_int_in(raw["outs"], 0, 2, "outs"),
        on_first=_bool(raw["on_first"]),
        on_second=_bool(raw["on_second"]),
        on_third=_bool(raw["on_third"]),
        run_diff=int(raw["run_diff"]),
        pitch_seq_no=_int_in(raw["pitch_seq_no"], 1, None, "pitch_seq_no"),
        pitcher_total_pitches=_int_in(raw["pitcher_total_pitches"], 1, None, "pitcher_total_pitches"),
        pitch_type=normalize_pitch_type(raw["pitch_type"]),
        pitch_speed=speed,
        demand_x=demand_x,
        demand_y=demand_y,
        actual_x=_optional_float(raw["actual_x"]),
        actual_y=_optional_float(raw["actual_y"]),
        pitcher_hand=_hand(raw["pitcher_hand"], "pitcher_hand"),
        batter_hand=_hand(raw["batter_hand"], "batter_hand"),
        outcome=EventCode.parse(raw["outcome"]),
        runs_scored_on_play=_int_in(raw["runs_scored_on_play"], 0, None, "runs_scored_on_play"),
    )


def parse_pitch_csv(path: str | Path, schema: dict[str, str] | None = None, strict: bool = False) -> ParseResult:
    """Parse a UTF-8 pitch CSV into events, collecting row-level rejections.

    ``schema`` maps PitchEvent field names to CSV column names; fields not
    listed keep their own name. Rejected rows carry their physical line
    number (the header is line 1 unless
    preceded by ``#`` comment lines). Rows whose ``pitch_seq_no`` fails to
    increase within a plate appearance are rejected as well. With
    ``strict=True`` the first rejection raises :class:`BadValue` instead.
    """
    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        mapping.update(schema)
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        # leading "#" lines (provenance comments) are skipped but still numbered
        skipped = 0
        pos = fh.tell()
        while fh.readline().startswith("#"):
            skipped += 1
            pos = fh.tell()
        fh.seek(pos)
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyFile(f"{path}: no header row")
        header = set(reader.fieldnames)
        missing = [mapping[f] for f in FIELD_NAMES if mapping[f] not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")

        events: list[PitchEvent] = []
        rejected: list[RejectedRow] = []
        last_seq: dict[tuple[str, int, str], tuple[int, bool]] = {}
        n_rows = 0
        for raw in reader:
            n_rows += 1
            line = reader.line_num + skipped
            row = {f: (raw.get(mapping[f]) or "") for f in FIELD_NAMES}
            blank = [f for f in FIELD_NAMES if f not in OPTIONAL_FIELDS and row[f].strip() == ""]
            if blank:
                rejected.append(RejectedRow(line, f"empty required field(s): {', '.join(blank)}"))
                continue
            try:
                ev = _parse_row(row)
            except ValueError as exc:
                rejected.append(RejectedRow(line, str(exc)))
                continue
            key = (ev.game_id, ev.inning, ev.half)
            prev = last_seq.get(key)
            if prev is not None and ev.pitch_seq_no != 1 and not prev[1] and ev.pitch_seq_no <= prev[0]:
                rejected.append(RejectedRow(line, f"pitch_seq_no {ev.pitch_seq_no} not increasing within plate appearance"))
                continue
            last_seq[key] = (ev.pitch_seq_no, is_terminal(ev.outcome))
            events.append(ev)
    if n_rows == 0:
        raise EmptyFile(f"{path}: no data rows")
    if rejected and strict:
        raise BadValue(rejected[0].reason, row=rejected[0].line)
    if rejected:
        log.warning("%s: rejected %d of %d rows", path, len(rejected), n_rows)
    return ParseResult(events, rejected)


def classify_demand_zone(demand_x: float, demand_y: float, batter_hand: str) -> DemandZone:
    """Inside/Outside/Excluded for one catcher demand (pitcher's view, px)."""
    if not (0 <= demand_x <= CANVAS_PX[0] and 0 <= demand_y <= CANVAS_PX[1]):
        raise OutOfCanvas(f"demand ({demand_x}, {demand_y}) outside {CANVAS_PX[0]}x{CANVAS_PX[1]} canvas")
    if batter_hand not in ("L", "R"):
        raise ValueError(f"batter_hand must be L or R, got {batter_hand!r}")
    if demand_y > TOP_MAX_Y:
        return DemandZone.EXCLUDED
    toward_first = demand_x >= INSIDE_MIN_X
    toward_third = demand_x <= OUTSIDE_MAX_X
    if batter_hand == "L":
        toward_first, toward_third = toward_third, toward_first
    if toward_first:
        return DemandZone.INSIDE
    if toward_third:
        return DemandZone.OUTSIDE
    return DemandZone.EXCLUDED


def classify_zones(demand_x, demand_y, batter_hand) -> np.ndarray:
    """Vectorised :func:`classify_demand_zone`; returns an array of zone values."""
    x = np.asarray(demand_x, dtype=float)
    y = np.asarray(demand_y, dtype=float)
    hand = np.asarray(batter_hand)
    if np.any((x < 0) | (x > CANVAS_PX[0]) | (y < 0) | (y > CANVAS_PX[1]) | np.isnan(x) | np.isnan(y)):
        raise OutOfCanvas("demand location outside canvas")
    low = y <= TOP_MAX_Y
    right = hand == "R"
    inside = low & np.where(right, x >= INSIDE_MIN_X, x <= OUTSIDE_MAX_X)
    outside = low & np.where(right, x <= OUTSIDE_MAX_X, x >= INSIDE_MIN_X)
    out = np.full(x.shape, DemandZone.EXCLUDED.value, dtype=object)
    out[inside] = DemandZone.INSIDE.value
    out[outside] = DemandZone.OUTSIDE.value
    return out


MonthDay = tuple[int, int]


@dataclass(frozen=True)
class FilterConfig:
    """Analysis-set rules. Windows are (month, day) ranges applied within each season."""

    feature_window: tuple[MonthDay, MonthDay] = ((3, 1), (6, 30))
    estimation_window: tuple[MonthDay, MonthDay] = ((7, 1), (9, 30))
    min_batter_pa: int = 100
    min_pitcher_tbf: int = 100
    pitch_types: frozenset[str] = frozenset({FOUR_SEAM})

    def __post_init__(self):
        for name in ("feature_window", "estimation_window"):
            lo, hi = getattr(self, name)
            if tuple(lo) > tuple(hi):
                raise ValueError(f"{name} starts after it ends")
        if tuple(self.feature_window[1]) >= tuple(self.estimation_window[0]):
            raise ValueError("feature window must end before the estimation window starts")
        object.__setattr__(self, "pitch_types", frozenset(normalize_pitch_type(p) for p in self.pitch_types))

    @classmethod
    def from_dict(cls, d: dict) -> "FilterConfig":
        kw = {}
        for key in ("feature_window", "estimation_window"):
            if key in d:
                kw[key] = tuple(_month_day(v) for v in d[key])
        for key in ("min_batter_pa", "min_pitcher_tbf"):
            if key in d:
                kw[key] = int(d[key])
        if "pitch_types" in d:
            kw["pitch_types"] = frozenset(d["pitch_types"])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "feature_window": [f"{m:02d}-{d:02d}" for m, d in self.feature_window],
            "estimation_window": [f"{m:02d}-{d:02d}" for m, d in self.estimation_window],
            "min_batter_pa": self.min_batter_pa,
            "min_pitcher_tbf": self.min_pitcher_tbf,
            "pitch_types": sorted(self.pitch_types),
        }


def _month_day(v) -> MonthDay:
    if isinstance(v, str):
        parts = v.split("-")
        return (int(parts[-2]), int(parts[-1]))
    m, d = v
    return (int(m), int(d))


def in_window(day: date, window: tuple[MonthDay, MonthDay]) -> bool:
    return tuple(window[0]) <= (day.month, day.day) <= tuple(window[1])


def _window_mask(dates: pd.Series, window: tuple[MonthDay, MonthDay]) -> np.ndarray:
    md = dates.dt.month.to_numpy() * 100 + dates.dt.day.to_numpy()
    lo = window[0][0] * 100 + window[0][1]
    hi = window[1][0] * 100 + window[1][1]
    return (md >= lo) & (md <= hi)


@dataclass
class PlayerCounts:
    """Season tallies keyed by (season, player_id)."""

    batter_pa: dict[tuple[int, str], int] = field(default_factory=dict)
    pitcher_tbf: dict[tuple[int, str], int] = field(default_factory=dict)


def player_counts(events: Iterable[PitchEvent] | pd.DataFrame) -> PlayerCounts:
    """Count completed plate appearances per batter and batters faced per pitcher."""
    frame = events if isinstance(events, pd.DataFrame) else events_to_frame(list(events))
    term = frame[frame["terminal"]]
    season = term["date"].dt.year
    bpa = Counter(zip(season, term["batter_id"]))
    ptbf = Counter(zip(season, term["pitcher_id"]))
    return PlayerCounts(
        batter_pa={(int(s), str(p)): n for (s, p), n in bpa.items()},
        pitcher_tbf={(int(s), str(p)): n for (s, p), n in ptbf.items()},
    )


FILTER_RULES = ("estimation_window", "pitch_type", "batter_pa", "pitcher_tbf", "zone")


@dataclass
class FilterResult:
    events: list[PitchEvent] | pd.DataFrame
    removed: dict[str, int]


def analysis_mask(frame: pd.DataFrame, cfg: FilterConfig, counts: PlayerCounts) -> tuple[np.ndarray, np.ndarray]:
    """Boolean keep-mask plus the first failing rule per row ("" when kept)."""
    season = frame["date"].dt.year.to_numpy()
    reason = np.full(len(frame), "", dtype=object)

    def mark(rule, fail):
        reason[(reason == "") & fail] = rule

    mark("estimation_window", ~_window_mask(frame["date"], cfg.estimation_window))
    mark("pitch_type", ~frame["pitch_type"].isin(cfg.pitch_types).to_numpy())
    pa = np.array([counts.batter_pa.get((int(s), str(b)), 0) for s, b in zip(season, frame["batter_id"])])
    mark("batter_pa", pa < cfg.min_batter_pa)
    tbf = np.array([counts.pitcher_tbf.get((int(s), str(p)), 0) for s, p in zip(season, frame["pitcher_id"])])
    mark("pitcher_tbf", tbf < cfg.min_pitcher_tbf)
    mark("zone", frame["zone"].to_numpy() == DemandZone.EXCLUDED.value)
    return reason == "", reason


def filter_analysis_set(events: Sequence[PitchEvent] | pd.DataFrame, cfg: FilterConfig,
                        player_counts: PlayerCounts) -> FilterResult:
    """Keep estimation-window pitches of allowed types by qualified players with a classified zone.

    ``removed`` counts each dropped row under the first rule it fails, in
    the order of ``FILTER_RULES``. Accepts either PitchEvent objects or an
    events frame and returns the same kind.
    """
    as_frame = isinstance(events, pd.DataFrame)
    frame = events if as_frame else events_to_frame(list(events))
    if len(frame) == 0:
        return FilterResult(frame if as_frame else [], {r: 0 for r in FILTER_RULES})
    keep, reason = analysis_mask(frame, cfg, player_counts)
    tally = Counter(reason[~keep])
    removed = {r: int(tally.get(r, 0)) for r in FILTER_RULES}
    for rule, n in removed.items():
        if n:
            log.info("filter: %s removed %d events", rule, n)
    if as_frame:
        return FilterResult(frame[keep].reset_index(drop=True), removed)
    return FilterResult([ev for ev, k in zip(events, keep) if k], removed)


EVENT_COLUMNS = list(FIELD_NAMES)


def events_to_frame(events: Sequence[PitchEvent]) -> pd.DataFrame:
    """Columnar view of events plus derived ``zone`` and ``terminal`` columns."""
    if events:
        frame = pd.DataFrame([asdict(ev) for ev in events], columns=EVENT_COLUMNS)
        frame["outcome"] = [ev.outcome.value for ev in events]
    else:
        frame = pd.DataFrame({c: pd.Series(dtype=object) for c in EVENT_COLUMNS})
    return finalize_frame(frame)


def finalize_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Coerce dtypes and add ``zone``/``terminal`` to an events frame."""
    frame = frame.copy()
    frame["date"] = pd.to_datetime(frame["date"])
    for col in ("game_id", "pitcher_id", "batter_id", "catcher_id"):
        frame[col] = frame[col].astype(str)
    for col in ("pitch_speed", "actual_x", "actual_y", "demand_x", "demand_y"):
        frame[col] = pd.to_numeric(frame[col], errors="coerce").astype(float)
    for col in ("on_first", "on_second", "on_third"):
        frame[col] = frame[col].astype(bool)
    frame["pitch_type"] = frame["pitch_type"].astype(str).map(normalize_pitch_type)
    frame["outcome"] = frame["outcome"].astype(str).map(lambda s: EventCode.parse(s).value)
    frame["zone"] = classify_zones(frame["demand_x"], frame["demand_y"], frame["batter_hand"]) if len(frame) else []
    nonterm = {EventCode.STRIKE.value, EventCode.BALL.value}
    frame["terminal"] = ~frame["outcome"].isin(nonterm)
    return frame


def frame_to_events(frame: pd.DataFrame) -> list[PitchEvent]:
    out = []
    for rec in frame[EVENT_COLUMNS].to_dict("records"):
        rec["date"] = pd.Timestamp(rec["date"]).date()
        rec["outcome"] = EventCode(rec["outcome"])
        for col in ("pitch_speed", "actual_x", "actual_y"):
            if rec[col] is not None and np.isnan(rec[col]):
                rec[col] = None
        for col in ("inning", "balls", "strikes", "outs", "run_diff", "pitch_seq_no",
                    "pitcher_total_pitches", "runs_scored_on_play"):
            rec[col] = int(rec[col])
        for col in ("on_first", "on_second", "on_third"):
            rec[col] = bool(rec[col])
        out.append(PitchEvent(**rec))
    return out


def read_events(path: str | Path) -> pd.DataFrame:
    """Load an events file written by the ``ingest`` subcommand (or a simulator)."""
    from .io import read_csv

    frame = read_csv(path, dtype={"game_id": str, "pitcher_id": str, "batter_id": str, "catcher_id": str})
    extra = [c for c in frame.columns if c not in EVENT_COLUMNS and c not in ("zone", "terminal")]
    out = finalize_frame(frame[EVENT_COLUMNS])
    for c in extra:
        out[c] = frame[c].to_numpy()
    return out


def frame_for_output(frame: pd.DataFrame) -> pd.DataFrame:
    out = frame.copy()
    out["date"] = out["date"].dt.strftime("%Y-%m-%d")
    for col in ("on_first", "on_second", "on_third", "terminal"):
        if col in out:
            out[col] = out[col].astype(int)
    return out
