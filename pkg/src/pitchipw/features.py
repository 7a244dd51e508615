"""The 18 confounders per pitch: game state, pitcher history and player aggregates.

Pitch confidence is an exponentially weighted summary of how recent
inside (outside) demands turned out, measured in runs. With ``d(n-1)`` the
run value of the previous pitch::

    C_in(n) = a * d(n-1) + (1 - a) * C_in(n-2)   if pitch n-1 was inside
            = C_in(n-1)                          otherwise

and symmetrically for outside; the signal is ``C_in - C_out``. The
``n-2`` index on the recursive term is taken literally by default
(``index_mode="literal"``); ``"contiguous"`` uses ``C_in(n-1)`` instead,
which is the ordinary exponential smoother. The same recursion keyed on
four-seam versus other pitch types gives the four-seam confidence.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from .codes import EventCode
from .errors import EmptyDenominator, MissingAggregate, NoEligiblePitches
from .ingest import FOUR_SEAM, DemandZone, FilterConfig, analysis_mask, player_counts
from .matrix import FEATURE_NAMES, TreatmentData
from .valuation import EventValueTable, RunExpectancyTable, event_values_from_frame, occurrence_delta_re

log = logging.getLogger(__name__)

INDEX_MODES = ("literal", "contiguous")

# ---------------------------------------------------------------------------
# pitch confidence


@dataclass(frozen=True)
class ConfidenceState:
    """Running confidence for one pitcher-season at one memory parameter.

    ``c_*`` hold the values at the current index n; ``lag_*`` hold the
    values at n-1, which the literal recursion reads as its "n-2" term
    once the state advances. ``last_index_in``/``last_index_out`` record
    the index of the most recent inside/outside pitch (0 when none).
    """

    alpha: float
    c_in: float = 0.0
    c_out: float = 0.0
    c_fourseam: float = 0.0
    c_other: float = 0.0
    lag_in: float = 0.0
    lag_out: float = 0.0
    lag_fourseam: float = 0.0
    lag_other: float = 0.0
    n: int = 1
    last_index_in: int = 0
    last_index_out: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")


def _arm(current: float, lagged: float, hit: bool, alpha: float, d: float, mode: str) -> float:
    if not hit:
        return current
    base = lagged if mode == "literal" else current
    return alpha * d + (1.0 - alpha) * base


def update_confidence(state: ConfidenceState, prev_pitch_zone: DemandZone | str | None, prev_delta_re: float,
                      prev_pitch_type: str | None = None, index_mode: str = "literal") -> ConfidenceState:
    """Advance the state by one pitch.

    ``prev_pitch_zone`` outside {inside, outside} (an excluded demand)
    leaves both zone arms unchanged; ``prev_pitch_type=None`` leaves the
    pitch-type arms unchanged.
    """
    if index_mode not in INDEX_MODES:
        raise ValueError(f"index_mode must be one of {INDEX_MODES}")
    d = float(prev_delta_re)
    if not np.isfinite(d):
        raise ValueError("prev_delta_re must be finite")
    zone = None if prev_pitch_zone is None else DemandZone(prev_pitch_zone)
    a = state.alpha
    inside, outside = zone is DemandZone.INSIDE, zone is DemandZone.OUTSIDE
    four = prev_pitch_type is not None and prev_pitch_type == FOUR_SEAM
    other = prev_pitch_type is not None and prev_pitch_type != FOUR_SEAM
    return replace(
        state,
        c_in=_arm(state.c_in, state.lag_in, inside, a, d, index_mode),
        c_out=_arm(state.c_out, state.lag_out, outside, a, d, index_mode),
        c_fourseam=_arm(state.c_fourseam, state.lag_fourseam, four, a, d, index_mode),
        c_other=_arm(state.c_other, state.lag_other, other, a, d, index_mode),
        lag_in=state.c_in,
        lag_out=state.c_out,
        lag_fourseam=state.c_fourseam,
        lag_other=state.c_other,
        n=state.n + 1,
        last_index_in=state.n if inside else state.last_index_in,
        last_index_out=state.n if outside else state.last_index_out,
    )


def confidence_signal(state: ConfidenceState) -> float:
    """C_in - C_out."""
    return state.c_in - state.c_out


def fourseam_signal(state: ConfidenceState) -> float:
    """C_fourseam - C_other."""
    return state.c_fourseam - state.c_other


def confidence_path(zones, values, alpha: float, pitch_types=None, index_mode: str = "literal") -> tuple[np.ndarray, np.ndarray]:
    """Zone and four-seam signals seen *before* each pitch of one pitcher-season.

    Element i of each array is the signal at pitch i, built from pitches
    0..i-1. This is the array form of repeated :func:`update_confidence`.
    """
    if index_mode not in INDEX_MODES:
        raise ValueError(f"index_mode must be one of {INDEX_MODES}")
    zones = np.asarray(zones, dtype=object)
    values = np.asarray(values, dtype=float)
    n = len(values)
    inside = zones == DemandZone.INSIDE.value
    outside = zones == DemandZone.OUTSIDE.value
    if pitch_types is None:
        four = other = np.zeros(n, dtype=bool)
    else:
        pt = np.asarray(pitch_types, dtype=object)
        four = pt == FOUR_SEAM
        other = ~four
    literal = index_mode == "literal"
    a, b = float(alpha), 1.0 - float(alpha)
    zone_sig = np.empty(n)
    type_sig = np.empty(n)
    cur = [0.0, 0.0, 0.0, 0.0]
    lag = [0.0, 0.0, 0.0, 0.0]
    for i in range(n):
        zone_sig[i] = cur[0] - cur[1]
        type_sig[i] = cur[2] - cur[3]
        d = values[i]
        hits = (inside[i], outside[i], four[i], other[i])
        nxt = [a * d + b * (lag[k] if literal else cur[k]) if hits[k] else cur[k] for k in range(4)]
        lag, cur = cur, nxt
    return zone_sig, type_sig


# ---------------------------------------------------------------------------
# player aggregates


def rolling_inside_ratio(zones: Iterable) -> float:
    """Share of inside demands among inside/outside demands."""
    z = np.asarray(list(zones) if not isinstance(zones, np.ndarray) else zones, dtype=object)
    n_in = int(np.sum(z == DemandZone.INSIDE.value))
    n_out = int(np.sum(z == DemandZone.OUTSIDE.value))
    if n_in + n_out == 0:
        raise NoEligiblePitches("no inside or outside demands in the window")
    return n_in / (n_in + n_out)


@dataclass(frozen=True)
class WobaWeights:
    weights: dict[str, float]
    exclude_from_denominator: frozenset[str] = frozenset()

    @classmethod
    def from_dict(cls, d: dict) -> "WobaWeights":
        w = {EventCode.parse(k).value: float(v) for k, v in d["weights"].items()}
        ex = frozenset(EventCode.parse(k).value for k in d.get("exclude_from_denominator", ()))
        return cls(w, ex)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "WobaWeights":
        if path is None:
            text = resources.files("pitchipw").joinpath("data/woba_weights.json").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"weights": dict(self.weights), "exclude_from_denominator": sorted(self.exclude_from_denominator)}


def compute_woba(batter_events: Iterable, weights: WobaWeights | None = None) -> float:
    """Weighted plate-appearance outcomes over counted plate appearances.

    ``batter_events`` are the outcome codes of completed plate appearances.
    """
    weights = weights or WobaWeights.load()
    num = 0.0
    den = 0
    for ev in batter_events:
        code = EventCode.parse(str(ev.value if isinstance(ev, EventCode) else ev)).value
        if code in weights.exclude_from_denominator:
            continue
        num += weights.weights.get(code, 0.0)
        den += 1
    if den == 0:
        raise EmptyDenominator("no plate appearances count toward the denominator")
    return num / den


# ---------------------------------------------------------------------------
# matrix assembly


@dataclass(frozen=True)
class FeatureConfig:
    filters: FilterConfig = field(default_factory=FilterConfig)
    alphas: tuple[float, float] = (0.6, 0.001)  # fast, slow
    index_mode: str = "literal"
    lag_scope: str = "game"  # or "plate_appearance"
    outcome: str = "event_value"  # or "occurrence"
    include_runs_on_play: bool = True
    strict: bool = False

    def __post_init__(self):
        if self.index_mode not in INDEX_MODES:
            raise ValueError(f"index_mode must be one of {INDEX_MODES}")
        if self.lag_scope not in ("game", "plate_appearance"):
            raise ValueError("lag_scope must be 'game' or 'plate_appearance'")
        if self.outcome not in ("event_value", "occurrence"):
            raise ValueError("outcome must be 'event_value' or 'occurrence'")
        if len(self.alphas) != 2 or not all(0 < a < 1 for a in self.alphas):
            raise ValueError("alphas must be two values in (0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        kw = {k: d[k] for k in ("index_mode", "lag_scope", "outcome", "include_runs_on_play", "strict") if k in d}
        if "alphas" in d:
            kw["alphas"] = tuple(float(a) for a in d["alphas"])
        if "filters" in d:
            kw["filters"] = FilterConfig.from_dict(d["filters"])
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filters"] = self.filters.to_dict()
        d["alphas"] = list(self.alphas)
        return d


@dataclass
class FeaturizeResult:
    data: TreatmentData
    event_values: EventValueTable
    removed: dict[str, int]
    missing_aggregate: int
    imputed_speed: int


def _window(frame: pd.DataFrame, window) -> np.ndarray:
    md = frame["date"].dt.month.to_numpy() * 100 + frame["date"].dt.day.to_numpy()
    return (md >= window[0][0] * 100 + window[0][1]) & (md <= window[1][0] * 100 + window[1][1])


def _lookup(keys: pd.MultiIndex | list, table: pd.Series) -> np.ndarray:
    return table.reindex(pd.MultiIndex.from_arrays(keys)).to_numpy(dtype=float)


def assemble_features(events: pd.DataFrame, re_table: RunExpectancyTable, cfg: FeatureConfig = FeatureConfig(),
                      woba_weights: WobaWeights | None = None) -> FeaturizeResult:
    """Build the treatment matrix for the analysis set of an events frame.

    ``events`` must be the full season(s), not just the analysis set:
    lags, confidence and player aggregates read pitches that the filters
    later drop. Rows keep file order within a date.
    """
    woba_weights = woba_weights or WobaWeights.load()
    frame = events.reset_index(drop=True)
    frame = frame.iloc[np.argsort(frame["date"].to_numpy(), kind="stable")].reset_index(drop=True)
    n = len(frame)
    fc = cfg.filters
    season = frame["date"].dt.year.to_numpy()
    pitcher = frame["pitcher_id"].to_numpy()
    batter = frame["batter_id"].to_numpy()
    terminal = frame["terminal"].to_numpy(dtype=bool)
    zone = frame["zone"].to_numpy()
    ptype = frame["pitch_type"].to_numpy()

    ev_table = event_values_from_frame(frame, re_table, cfg.include_runs_on_play, skip_incomplete=True)
    rv = frame["outcome"].map({c.value: v for c, v in ev_table.value.items()}).fillna(0.0).to_numpy(dtype=float)

    in_fw = _window(frame, fc.feature_window)
    allowed = frame["pitch_type"].isin(fc.pitch_types).to_numpy()

    # pitcher speed in the feature window, used to impute missing and absent lags
    speed = frame["pitch_speed"].to_numpy(dtype=float)
    has_speed = ~np.isnan(speed)
    p_key = [season, pitcher]
    fw_speed = pd.Series(speed[in_fw & allowed & has_speed]).groupby(
        [season[in_fw & allowed & has_speed], pitcher[in_fw & allowed & has_speed]]).mean()
    season_speed = pd.Series(speed[has_speed]).groupby([season[has_speed], pitcher[has_speed]]).mean()
    fill = _lookup(p_key, fw_speed)
    fill = np.where(np.isnan(fill), _lookup(p_key, season_speed), fill)
    fill = np.where(np.isnan(fill), np.nanmean(speed) if has_speed.any() else 0.0, fill)
    speed_filled = np.where(has_speed, speed, fill)

    # lag features, grouped by pitcher within a game (optionally within a plate appearance)
    inning_key = frame["game_id"].astype(str) + "/" + frame["inning"].astype(str) + "/" + frame["half"].astype(str)
    new_pa = np.ones(n, dtype=bool)
    if n:
        new_pa[1:] = terminal[:-1] | (inning_key.to_numpy()[1:] != inning_key.to_numpy()[:-1])
    lag_groups = [frame["game_id"].to_numpy(), pitcher]
    if cfg.lag_scope == "plate_appearance":
        lag_groups = [np.cumsum(new_pa)]
    rv_s = pd.Series(rv).groupby(lag_groups)
    sp_s = pd.Series(speed_filled).groupby(lag_groups)
    result_1 = rv_s.shift(1).fillna(0.0).to_numpy()
    result_2 = rv_s.shift(2).fillna(0.0).to_numpy()
    speed_1 = sp_s.shift(1).to_numpy()
    speed_2 = sp_s.shift(2).to_numpy()
    speed_1 = np.where(np.isnan(speed_1), fill, speed_1)
    speed_2 = np.where(np.isnan(speed_2), fill, speed_2)

    # batter's most recent completed plate appearance this season
    pa_val = pd.Series(np.where(terminal, rv, np.nan))
    prev_pa = pa_val.groupby([season, batter]).shift(1)
    prev_pa = prev_pa.groupby([season, batter]).ffill().fillna(0.0).to_numpy()

    # confidence folds over each pitcher-season, every pitch type
    conf = {name: np.zeros(n) for name in FEATURE_NAMES if name.startswith("conf_")}
    groups = pd.Series(np.arange(n)).groupby(p_key).indices
    for key in sorted(groups, key=lambda k: (int(k[0]), str(k[1]))):
        idx = groups[key]
        for alpha, suffix in zip(cfg.alphas, ("fast", "slow")):
            zs, ts = confidence_path(zone[idx], rv[idx], alpha, ptype[idx], cfg.index_mode)
            conf[f"conf_inside_{suffix}"][idx] = zs
            conf[f"conf_fourseam_{suffix}"][idx] = ts

    # feature-window aggregates
    classified = np.isin(zone, [DemandZone.INSIDE.value, DemandZone.OUTSIDE.value])
    ratio_rows = in_fw & allowed & classified
    is_in = pd.Series((zone == DemandZone.INSIDE.value)[ratio_rows].astype(float))
    p_ratio = _lookup(p_key, is_in.groupby([season[ratio_rows], pitcher[ratio_rows]]).mean())
    b_ratio = _lookup([season, batter], is_in.groupby([season[ratio_rows], batter[ratio_rows]]).mean())
    woba_rows = in_fw & terminal
    codes = frame["outcome"].to_numpy()[woba_rows]
    counted = ~np.isin(codes, list(woba_weights.exclude_from_denominator))
    wv = pd.Series(np.array([woba_weights.weights.get(c, 0.0) for c in codes]))
    wk = [season[woba_rows][counted], batter[woba_rows][counted]]
    woba = _lookup([season, batter], wv[counted].reset_index(drop=True).groupby(wk).mean())

    runner = frame["on_first"].to_numpy(int) + 2 * frame["on_second"].to_numpy(int) + 4 * frame["on_third"].to_numpy(int)
    cols = {
        "ball_count": frame["balls"].to_numpy(float),
        "out_count": frame["outs"].to_numpy(float),
        "runner_code": runner.astype(float),
        "run_diff": frame["run_diff"].to_numpy(float),
        "same_hand": (frame["pitcher_hand"] == frame["batter_hand"]).to_numpy(float),
        "total_pitch_in_game": frame["pitcher_total_pitches"].to_numpy(float),
        "result_1_ago": result_1,
        "result_2_ago": result_2,
        "speed_1_ago": speed_1,
        "speed_2_ago": speed_2,
        **conf,
        "prev_batting_result": prev_pa,
        "pitcher_inside_ratio": p_ratio,
        "batter_inside_ratio": b_ratio,
        "batter_woba": woba,
    }
    X = np.column_stack([cols[name] for name in FEATURE_NAMES])

    counts = player_counts(frame)
    keep, reason = analysis_mask(frame, fc, counts)
    tally = pd.Series(reason[~keep]).value_counts()
    removed = {r: int(tally.get(r, 0)) for r in ("estimation_window", "pitch_type", "batter_pa", "pitcher_tbf", "zone")}
    lacking = keep & np.isnan(X).any(axis=1)
    if lacking.any():
        first = int(np.flatnonzero(lacking)[0])
        msg = (f"{int(lacking.sum())} analysis pitch(es) lack feature-window aggregates "
               f"(first: pitcher {pitcher[first]}, batter {batter[first]})")
        if cfg.strict:
            raise MissingAggregate(msg)
        log.warning("%s; dropped", msg)
    rows = keep & ~lacking

    if cfg.outcome == "occurrence":
        y = occurrence_delta_re(frame, re_table, cfg.include_runs_on_play, skip_incomplete=True)
        bad = rows & np.isnan(y)
        rows &= ~bad
    else:
        y = rv
    data = TreatmentData(
        unit_id=np.flatnonzero(rows).astype(np.int64),
        X=X[rows],
        z=(zone[rows] == DemandZone.INSIDE.value).astype(int),
        y=y[rows].astype(float),
        game_id=frame["game_id"].astype(str).to_numpy()[rows],
    )
    imputed = int((~has_speed & rows).sum())
    return FeaturizeResult(data, ev_table, removed, int(lacking.sum()), imputed)


featurize = assemble_features
