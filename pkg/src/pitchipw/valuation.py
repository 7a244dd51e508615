"""Run expectancy by base-out state and run values per event type.

A half-inning is identified by ``inning_id`` when that column exists,
otherwise by ``(game_id, inning, half)``; rows inside a half-inning must be
in play order. The table is either the usual 24 base-out states or, with
``by_count=True``, 288 base-out-count states. Only the count-aware table
gives non-terminal pitches (strike, ball) a non-zero run value.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import pandas as pd

from .codes import EventCode, OUTS_ON_PLAY
from .errors import IncompleteInning

log = logging.getLogger(__name__)

N_BASE_OUT = 24
N_COUNTS = 12  # balls 0-3 x strikes 0-2


class BaseOutState(NamedTuple):
    outs: int
    first: bool = False
    second: bool = False
    third: bool = False

    @property
    def index(self) -> int:
        return self.outs * 8 + int(self.first) + 2 * int(self.second) + 4 * int(self.third)

    @classmethod
    def from_index(cls, i: int) -> "BaseOutState":
        outs, code = divmod(int(i), 8)
        return cls(outs, bool(code & 1), bool(code & 2), bool(code & 4))

    def label(self) -> str:
        return f"{self.outs}|{int(self.first)}{int(self.second)}{int(self.third)}"


ALL_STATES = tuple(BaseOutState.from_index(i) for i in range(N_BASE_OUT))


def state_index(outs, first, second, third, balls=None, strikes=None):
    """Integer state id; pass balls/strikes for the count-aware layout."""
    base = (np.asarray(outs, dtype=int) * 8 + np.asarray(first, dtype=int)
            + 2 * np.asarray(second, dtype=int) + 4 * np.asarray(third, dtype=int))
    if balls is None:
        return base
    return base * N_COUNTS + np.asarray(balls, dtype=int) * 3 + np.asarray(strikes, dtype=int)


@dataclass(frozen=True)
class RunExpectancyTable:
    """Expected runs to the end of the half-inning, indexed by state id."""

    values: np.ndarray
    sample_n: np.ndarray
    by_count: bool = False

    @property
    def n_states(self) -> int:
        return len(self.values)

    def index_of(self, state) -> int:
        if isinstance(state, BaseOutState):
            if self.by_count:
                raise KeyError("count-aware table needs (state, balls, strikes)")
            return state.index
        if isinstance(state, tuple) and len(state) == 3 and isinstance(state[0], BaseOutState):
            if not self.by_count:
                return state[0].index
            s, balls, strikes = state
            return s.index * N_COUNTS + balls * 3 + strikes
        return int(state)

    def __getitem__(self, state) -> float:
        return float(self.values[self.index_of(state)])

    def count(self, state) -> int:
        return int(self.sample_n[self.index_of(state)])

    def labels(self) -> list[str]:
        if not self.by_count:
            return [s.label() for s in ALL_STATES]
        return [f"{s.label()}|{b}-{k}" for s in ALL_STATES for b in range(4) for k in range(3)]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"state": self.labels(), "value": self.values, "n": self.sample_n})

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "RunExpectancyTable":
        by_count = len(frame) == N_BASE_OUT * N_COUNTS
        if len(frame) not in (N_BASE_OUT, N_BASE_OUT * N_COUNTS):
            raise ValueError(f"run expectancy table must have 24 or 288 rows, got {len(frame)}")
        table = cls(np.zeros(len(frame)), np.zeros(len(frame), dtype=int), by_count)
        order = {lab: i for i, lab in enumerate(table.labels())}
        values = np.zeros(len(frame))
        counts = np.zeros(len(frame), dtype=int)
        for lab, v, n in zip(frame["state"].astype(str), frame["value"], frame["n"]):
            values[order[lab]] = v
            counts[order[lab]] = n
        return cls(values, counts, by_count)

    def to_dict(self) -> dict:
        return {"by_count": self.by_count,
                "states": [{"state": lab, "value": float(v), "n": int(n)}
                           for lab, v, n in zip(self.labels(), self.values, self.sample_n)]}

    @classmethod
    def from_dict(cls, d: dict) -> "RunExpectancyTable":
        return cls.from_frame(pd.DataFrame(d["states"]))


@dataclass(frozen=True)
class EventValueTable:
    """Mean run value (ΔRE) and occurrence count per event code."""

    value: dict[EventCode, float]
    sample_n: dict[EventCode, int]

    def __getitem__(self, code) -> float:
        return self.value[EventCode(code)]

    def get(self, code, default: float = 0.0) -> float:
        return self.value.get(EventCode(code), default)

    def to_frame(self) -> pd.DataFrame:
        codes = [c for c in EventCode if c in self.value]
        return pd.DataFrame({"event": [c.value for c in codes],
                             "value": [self.value[c] for c in codes],
                             "n": [self.sample_n[c] for c in codes]})

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "EventValueTable":
        codes = [EventCode.parse(e) for e in frame["event"].astype(str)]
        return cls(dict(zip(codes, map(float, frame["value"]))), dict(zip(codes, map(int, frame["n"]))))

    def to_dict(self) -> dict:
        return {"events": self.to_frame().to_dict("records")}

    @classmethod
    def from_dict(cls, d: dict) -> "EventValueTable":
        return cls.from_frame(pd.DataFrame(d["events"]))


def _inning_keys(frame: pd.DataFrame) -> np.ndarray:
    if "inning_id" in frame.columns:
        return pd.factorize(frame["inning_id"])[0]
    keys = frame["game_id"].astype(str) + "/" + frame["inning"].astype(str) + "/" + frame["half"].astype(str)
    return pd.factorize(keys)[0]


@dataclass
class _Layout:
    inning: np.ndarray
    first: np.ndarray
    last: np.ndarray
    pa_start: np.ndarray
    complete: np.ndarray  # per row: its half-inning ends on the third out


def _layout(frame: pd.DataFrame) -> _Layout:
    inning = _inning_keys(frame)
    n = len(frame)
    first = np.ones(n, dtype=bool)
    first[1:] = inning[1:] != inning[:-1]
    last = np.ones(n, dtype=bool)
    last[:-1] = inning[1:] != inning[:-1]
    if "terminal" in frame.columns:
        terminal = frame["terminal"].to_numpy(dtype=bool)
    else:
        terminal = ~frame["outcome"].isin([EventCode.STRIKE.value, EventCode.BALL.value]).to_numpy()
    pa_start = first.copy()
    pa_start[1:] |= terminal[:-1]
    outs_made = frame["outcome"].map(lambda c: OUTS_ON_PLAY.get(EventCode(c), 0)).to_numpy()
    ends = frame["outs"].to_numpy() + outs_made
    good_end = np.zeros(inning.max() + 1 if n else 0, dtype=bool)
    good_end[inning[last]] = ends[last] >= 3
    return _Layout(inning, first, last, pa_start, good_end[inning])


def _check_complete(frame: pd.DataFrame, lay: _Layout, skip_incomplete: bool) -> np.ndarray:
    if lay.complete.all():
        return np.ones(len(frame), dtype=bool)
    bad = np.unique(lay.inning[~lay.complete])
    if not skip_incomplete:
        raise IncompleteInning(f"{len(bad)} half-inning(s) do not end on the third out "
                               f"(first at row {int(np.argmax(~lay.complete))})")
    log.warning("skipping %d incomplete half-inning(s)", len(bad))
    return lay.complete


def _state_ids(frame: pd.DataFrame, by_count: bool) -> np.ndarray:
    if by_count:
        return state_index(frame["outs"], frame["on_first"], frame["on_second"], frame["on_third"],
                           frame["balls"], frame["strikes"])
    return state_index(frame["outs"], frame["on_first"], frame["on_second"], frame["on_third"])


def build_re_table(frame: pd.DataFrame, by_count: bool = False, skip_incomplete: bool = False) -> RunExpectancyTable:
    """Mean runs from each state's occurrences to the end of the half-inning.

    Base-out states occur once per plate appearance (at its first pitch);
    base-out-count states occur at every pitch. Runs on the play that
    starts from a state count toward that state.
    """
    frame = frame.reset_index(drop=True)
    lay = _layout(frame)
    keep = _check_complete(frame, lay, skip_incomplete)
    runs = frame["runs_scored_on_play"].to_numpy(dtype=float)
    # runs from this row to the end of its half-inning (inclusive)
    total = np.bincount(lay.inning, weights=runs)
    before = np.cumsum(runs) - runs
    inning_start = np.zeros_like(total)
    firsts = np.flatnonzero(lay.first)
    inning_start[lay.inning[firsts]] = before[firsts]
    to_end = total[lay.inning] - (before - inning_start[lay.inning])

    ids = _state_ids(frame, by_count)
    occurs = keep & (np.ones(len(frame), dtype=bool) if by_count else lay.pa_start)
    size = N_BASE_OUT * (N_COUNTS if by_count else 1)
    n = np.bincount(ids[occurs], minlength=size)
    sums = np.bincount(ids[occurs], weights=to_end[occurs], minlength=size)
    values = np.divide(sums, n, out=np.zeros(size), where=n > 0)
    table = RunExpectancyTable(values, n.astype(int), by_count)
    _warn_table(table)
    return table


def _warn_table(table: RunExpectancyTable) -> None:
    missing = int((table.sample_n == 0).sum())
    if missing:
        warnings.warn(f"{missing} state(s) never observed; their run expectancy is set to 0", stacklevel=3)
    v = table.values.reshape(3, 8, -1)
    seen = table.sample_n.reshape(3, 8, -1) > 0
    both = seen[1:] & seen[:-1]
    if np.any((v[1:] > v[:-1] + 1e-12) & both):
        warnings.warn("run expectancy increases with outs for some base state", stacklevel=3)


def delta_re(before, after, runs_scored: int, table: RunExpectancyTable, include_runs_on_play: bool = True) -> float:
    """RE_after - RE_before (+ runs on the play); ``after=None`` marks the third out."""
    re_after = 0.0 if after is None else table[after]
    d = re_after - table[before]
    return d + runs_scored if include_runs_on_play else d


def occurrence_delta_re(frame: pd.DataFrame, table: RunExpectancyTable, include_runs_on_play: bool = True,
                        skip_incomplete: bool = False) -> np.ndarray:
    """Per-row ΔRE where each row's after-state is the next row of its half-inning.

    Rows of skipped incomplete half-innings get NaN.
    """
    frame = frame.reset_index(drop=True)
    lay = _layout(frame)
    keep = _check_complete(frame, lay, skip_incomplete)
    ids = _state_ids(frame, table.by_count)
    re_before = table.values[ids]
    re_after = np.zeros(len(frame))
    re_after[:-1] = re_before[1:]
    re_after[lay.last] = 0.0
    d = re_after - re_before
    if include_runs_on_play:
        d = d + frame["runs_scored_on_play"].to_numpy(dtype=float)
    d[~keep] = np.nan
    return d


def build_event_value_table(occurrences: Iterable[tuple[EventCode | str, float]]) -> EventValueTable:
    """Arithmetic mean ΔRE per event code."""
    sums: dict[EventCode, float] = {}
    counts: dict[EventCode, int] = {}
    for code, d in occurrences:
        code = EventCode(code)
        sums[code] = sums.get(code, 0.0) + float(d)
        counts[code] = counts.get(code, 0) + 1
    if not counts:
        raise ValueError("no occurrences")
    # fixed enum order keeps the result independent of input order
    value = {c: sums[c] / counts[c] for c in EventCode if c in counts}
    table = EventValueTable(value, {c: counts[c] for c in value})
    s, b = value.get(EventCode.STRIKE), value.get(EventCode.BALL)
    if s is not None and b is not None and not (s < 0 < b):
        warnings.warn(f"expected strike < 0 < ball, got strike={s:.4f}, ball={b:.4f}", stacklevel=2)
    return table


def event_values_from_frame(frame: pd.DataFrame, table: RunExpectancyTable, include_runs_on_play: bool = True,
                            skip_incomplete: bool = False) -> EventValueTable:
    d = occurrence_delta_re(frame, table, include_runs_on_play, skip_incomplete)
    ok = ~np.isnan(d)
    codes = frame["outcome"].to_numpy()[ok]
    vals = d[ok]
    # vectorised mean per code, then the same ordering/warnings as the fold
    uniq, inv = np.unique(codes, return_inverse=True)
    sums = np.bincount(inv, weights=vals)
    counts = np.bincount(inv)
    means = dict(zip(uniq, sums / counts))
    ns = dict(zip(uniq, counts))
    value = {c: float(means[c.value]) for c in EventCode if c.value in means}
    out = EventValueTable(value, {c: int(ns[c.value]) for c in value})
    s, b = value.get(EventCode.STRIKE), value.get(EventCode.BALL)
    if s is not None and b is not None and not (s < 0 < b):
        warnings.warn(f"expected strike < 0 < ball, got strike={s:.4f}, ball={b:.4f}", stacklevel=2)
    return out
