"""Synthetic data with known ground truth.

Three generators live here:

* :func:`generate` draws a feature matrix with a chosen confounding
  structure and an additive treatment effect, plus a manifest holding the
  true effect and propensity function.
* :func:`generate_innings` runs a pitch-level Markov chain over
  base-out-count states and returns play-by-play half-innings.
  :func:`exact_run_expectancy` solves the same chain in closed form.
* :func:`simulate_season` dresses simulated innings up as a full
  pitch-by-pitch CSV (players, dates, demand locations) for the ingest and
  featurize stages. Demand locations there carry no causal effect.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import optimize, special, stats

from .codes import EventCode
from .errors import DegenerateAssignment, MissingManifest, NonterminatingChain
from .matrix import FEATURE_NAMES, TreatmentData
from .valuation import N_BASE_OUT, N_COUNTS

PROPENSITY_BOUNDS = (0.02, 0.98)

# ---------------------------------------------------------------------------
# feature-matrix generator


@dataclass(frozen=True)
class Marginal:
    """Marginal law of one confounder, driven by a latent standard normal.

    The latent is truncated at +-3 so every feature is bounded. kind:
    ``normal`` (mean, sd; optional rounding),
    ``beta`` (a, b), ``uniform_int`` (lo, hi) or ``discrete`` (values,
    probs).
    """

    kind: str
    params: tuple
    round_to_int: bool = False

    def transform(self, latent: np.ndarray) -> np.ndarray:
        latent = np.clip(latent, -3.0, 3.0)
        if self.kind == "normal":
            mean, sd = self.params
            x = mean + sd * latent
            return np.round(x) if self.round_to_int else x
        u = special.ndtr(latent)
        if self.kind == "beta":
            a, b = self.params
            return stats.beta.ppf(u, a, b)
        if self.kind == "uniform_int":
            lo, hi = self.params
            return np.minimum(lo + np.floor(u * (hi - lo + 1)), hi)
        if self.kind == "discrete":
            values, probs = self.params
            cdf = np.cumsum(np.asarray(probs, dtype=float) / np.sum(probs))
            idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(values) - 1)
            return np.asarray(values, dtype=float)[idx]
        raise ValueError(f"unknown marginal kind {self.kind!r}")

    def moments(self) -> tuple[float, float]:
        """Center and scale used to standardise the feature in the linear predictors."""
        if self.kind == "normal":
            return float(self.params[0]), float(self.params[1])
        if self.kind == "beta":
            a, b = self.params
            return float(stats.beta.mean(a, b)), float(stats.beta.std(a, b))
        if self.kind == "uniform_int":
            lo, hi = self.params
            vals = np.arange(lo, hi + 1, dtype=float)
            return float(vals.mean()), float(vals.std())
        values, probs = self.params
        v = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float) / np.sum(probs)
        m = float(v @ p)
        return m, float(np.sqrt(((v - m) ** 2) @ p))

    def to_dict(self) -> dict:
        params = [list(x) if isinstance(x, (tuple, list)) else x for x in self.params]
        return {"kind": self.kind, "params": params, "round_to_int": self.round_to_int}


_RESULT_VALUES = ((-0.038, 0.032, -0.235, 0.437, -0.255, 0.786, -0.266, 0.292),
                  (0.52, 0.33, 0.05, 0.035, 0.03, 0.01, 0.015, 0.01))
_PA_VALUES = ((-0.235, -0.255, -0.238, 0.437, 0.292, 0.786, 1.408, -0.746, 0.311),
              (0.40, 0.14, 0.06, 0.16, 0.08, 0.05, 0.03, 0.05, 0.03))

DEFAULT_MARGINALS: dict[str, Marginal] = {
    "ball_count": Marginal("discrete", ((0, 1, 2, 3), (0.45, 0.28, 0.18, 0.09))),
    "out_count": Marginal("discrete", ((0, 1, 2), (0.36, 0.33, 0.31))),
    "runner_code": Marginal("discrete", (tuple(range(8)), (0.55, 0.15, 0.08, 0.05, 0.05, 0.04, 0.04, 0.04))),
    "run_diff": Marginal("normal", (0.0, 2.5), round_to_int=True),
    "same_hand": Marginal("discrete", ((0, 1), (0.45, 0.55))),
    "total_pitch_in_game": Marginal("uniform_int", (1, 120)),
    "result_1_ago": Marginal("discrete", _RESULT_VALUES),
    "result_2_ago": Marginal("discrete", _RESULT_VALUES),
    "speed_1_ago": Marginal("normal", (143.0, 5.0)),
    "speed_2_ago": Marginal("normal", (143.0, 5.0)),
    "conf_inside_fast": Marginal("normal", (0.0, 0.03)),
    "conf_inside_slow": Marginal("normal", (0.0, 0.005)),
    "conf_fourseam_fast": Marginal("normal", (0.0, 0.03)),
    "conf_fourseam_slow": Marginal("normal", (0.0, 0.005)),
    "prev_batting_result": Marginal("discrete", _PA_VALUES),
    "pitcher_inside_ratio": Marginal("beta", (8.0, 17.0)),
    "batter_inside_ratio": Marginal("beta", (8.0, 17.0)),
    "batter_woba": Marginal("normal", (0.32, 0.035)),
}

# latent-normal correlations; woba/inside-ratio gives a Pearson r near 0.31
DEFAULT_CORRELATIONS = {
    ("batter_inside_ratio", "batter_woba"): 0.32,
    ("speed_1_ago", "speed_2_ago"): 0.7,
    ("conf_inside_fast", "conf_inside_slow"): 0.4,
    ("conf_fourseam_fast", "conf_fourseam_slow"): 0.4,
}


@dataclass(frozen=True)
class Heterogeneity:
    """Stratum-specific effects: ``taus[k]`` applies where edges[k] <= feature < edges[k+1]."""

    feature: str
    edges: tuple[float, ...]
    taus: tuple[float, ...]

    def __post_init__(self):
        if len(self.taus) != len(self.edges) - 1:
            raise ValueError("need one tau per bin")

    def unit_tau(self, x: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.taus) - 1)
        return np.asarray(self.taus)[idx]


@dataclass(frozen=True)
class SynthConfig:
    n_units: int = 50_000
    true_tau: float = 0.006
    marginals: dict = field(default_factory=lambda: dict(DEFAULT_MARGINALS))
    correlations: dict = field(default_factory=lambda: dict(DEFAULT_CORRELATIONS))
    # linear predictors act on standardised features (x - center) / scale
    assignment_intercept: float = 0.0
    assignment_coefs: dict = field(default_factory=dict)
    outcome_intercept: float = 0.0
    outcome_coefs: dict = field(default_factory=dict)
    noise_sd: float = 0.04
    seed: int = 0
    heterogeneity: Heterogeneity | None = None
    preset: str = "custom"

    def __post_init__(self):
        if self.n_units < 1:
            raise ValueError("n_units must be >= 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        unknown = set(self.assignment_coefs) | set(self.outcome_coefs)
        unknown -= set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"unknown feature(s) in coefficients: {sorted(unknown)}")

    def coef_vector(self, which: str) -> np.ndarray:
        coefs = self.assignment_coefs if which == "assignment" else self.outcome_coefs
        return np.array([float(coefs.get(f, 0.0)) for f in FEATURE_NAMES])

    def centers_scales(self) -> tuple[np.ndarray, np.ndarray]:
        cs = np.array([self.marginals[f].moments() for f in FEATURE_NAMES])
        return cs[:, 0], cs[:, 1]

    def latent_corr(self) -> np.ndarray:
        c = np.eye(len(FEATURE_NAMES))
        for (a, b), r in self.correlations.items():
            i, j = FEATURE_NAMES.index(a), FEATURE_NAMES.index(b)
            c[i, j] = c[j, i] = r
        return c

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "n_units": self.n_units,
            "true_tau": self.true_tau,
            "marginals": {k: m.to_dict() for k, m in self.marginals.items()},
            "correlations": [[a, b, r] for (a, b), r in self.correlations.items()],
            "assignment_intercept": self.assignment_intercept,
            "assignment_coefs": dict(self.assignment_coefs),
            "outcome_intercept": self.outcome_intercept,
            "outcome_coefs": dict(self.outcome_coefs),
            "noise_sd": self.noise_sd,
            "seed": self.seed,
            "heterogeneity": None if self.heterogeneity is None else asdict(self.heterogeneity),
        }


_INSIDE_BASE = math.log(0.32 / 0.68)

_CONFOUNDED_ASSIGN = {
    "pitcher_inside_ratio": 0.24,
    "batter_inside_ratio": 0.21,
    "batter_woba": 0.12,
    "same_hand": -0.09,
    "result_1_ago": -0.024,
    "runner_code": 0.06,
    "ball_count": -0.03,
}
_CONFOUNDED_OUTCOME = {
    "batter_woba": 0.0072,
    "batter_inside_ratio": 0.0024,
    "pitcher_inside_ratio": 0.0018,
    "ball_count": 0.0036,
    "runner_code": 0.0024,
    "same_hand": -0.0018,
    "result_1_ago": 0.0012,
}
_RANKED_ASSIGN = {
    "pitcher_inside_ratio": 0.4,
    "batter_inside_ratio": 0.35,
    "result_1_ago": -0.07,
    "runner_code": 0.16,
    "same_hand": -0.14,
    "result_2_ago": -0.03,
    "batter_woba": 0.06,
    "ball_count": -0.05,
    "conf_inside_fast": 0.03,
    "out_count": 0.03,
}

PRESETS = ("randomized", "confounded-strong", "paper-shaped", "heterogeneous")


def preset_config(name: str, n_units: int = 50_000, true_tau: float = 0.006, seed: int = 0) -> SynthConfig:
    """Named configurations.

    ``heterogeneous`` uses the confounded-strong design with effects that
    shrink as batter wOBA rises (bins split at 0.30 and 0.34); ``true_tau``
    is then ignored in favour of the stratum effects.
    """
    base = dict(n_units=n_units, true_tau=true_tau, seed=seed, preset=name)
    if name == "randomized":
        return SynthConfig(**base, outcome_coefs=dict(_CONFOUNDED_OUTCOME))
    if name == "confounded-strong":
        return SynthConfig(**base, assignment_intercept=_INSIDE_BASE, assignment_coefs=dict(_CONFOUNDED_ASSIGN),
                           outcome_coefs=dict(_CONFOUNDED_OUTCOME))
    if name == "paper-shaped":
        return SynthConfig(**base, assignment_intercept=_INSIDE_BASE, assignment_coefs=dict(_RANKED_ASSIGN),
                           outcome_coefs=dict(_CONFOUNDED_OUTCOME))
    if name == "heterogeneous":
        het = Heterogeneity("batter_woba", (-np.inf, 0.30, 0.34, np.inf), (0.010, 0.006, 0.002))
        return SynthConfig(**base, assignment_intercept=_INSIDE_BASE, assignment_coefs=dict(_CONFOUNDED_ASSIGN),
                           outcome_coefs=dict(_CONFOUNDED_OUTCOME), heterogeneity=het)
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


@dataclass
class SynthResult:
    data: TreatmentData  # p is left unset: the true propensity stays in the oracle
    true_propensity: np.ndarray
    unit_tau: np.ndarray
    manifest: dict


_CHUNK = 65_536


def _draw_features(cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    chol = np.linalg.cholesky(cfg.latent_corr())
    root = np.random.SeedSequence(cfg.seed)
    n_chunks = -(-cfg.n_units // _CHUNK)
    parts = []
    for k, child in enumerate(root.spawn(n_chunks)):
        m = min(_CHUNK, cfg.n_units - k * _CHUNK)
        rng = np.random.default_rng(child)
        latent = rng.standard_normal((m, len(FEATURE_NAMES))) @ chol.T
        draws = rng.random(m), rng.standard_normal(m)
        parts.append((latent, *draws))
    latent = np.concatenate([p[0] for p in parts])
    u_assign = np.concatenate([p[1] for p in parts])
    noise = np.concatenate([p[2] for p in parts])
    X = np.column_stack([cfg.marginals[f].transform(latent[:, j]) for j, f in enumerate(FEATURE_NAMES)])
    return X, u_assign, noise


def true_propensity(cfg: SynthConfig, X: np.ndarray) -> np.ndarray:
    center, scale = cfg.centers_scales()
    return special.expit(cfg.assignment_intercept + ((X - center) / scale) @ cfg.coef_vector("assignment"))


def baseline_outcome(cfg: SynthConfig, X: np.ndarray) -> np.ndarray:
    center, scale = cfg.centers_scales()
    return cfg.outcome_intercept + ((X - center) / scale) @ cfg.coef_vector("outcome")


def generate(cfg: SynthConfig) -> SynthResult:
    """Draw X, then Z ~ Bernoulli(logistic(linear predictor)), Y = tau*Z + g(X) + noise."""
    X, u_assign, noise = _draw_features(cfg)
    p = true_propensity(cfg, X)
    lo, hi = PROPENSITY_BOUNDS
    if p.min() < lo or p.max() > hi:
        raise DegenerateAssignment(f"true propensities span [{p.min():.4f}, {p.max():.4f}], outside [{lo}, {hi}]")
    z = (u_assign < p).astype(int)
    if cfg.heterogeneity is None:
        tau = np.full(cfg.n_units, cfg.true_tau)
    else:
        tau = cfg.heterogeneity.unit_tau(X[:, FEATURE_NAMES.index(cfg.heterogeneity.feature)])
    y = tau * z + baseline_outcome(cfg, X) + cfg.noise_sd * noise
    unit_id = np.arange(cfg.n_units)
    data = TreatmentData(unit_id=unit_id, X=X, z=z, y=y)
    manifest = build_manifest(cfg, X, tau)
    return SynthResult(data, p, tau, manifest)


def build_manifest(cfg: SynthConfig, X: np.ndarray, tau: np.ndarray) -> dict:
    center, scale = cfg.centers_scales()
    manifest = {
        "true_tau": float(tau.mean()) if cfg.heterogeneity is not None else cfg.true_tau,
        "seed": cfg.seed,
        "n_units": cfg.n_units,
        "effect": "additive-homogeneous" if cfg.heterogeneity is None else "additive-stratified",
        "propensity_function": {
            "link": "logistic",
            "intercept": cfg.assignment_intercept,
            "coefs": dict(zip(FEATURE_NAMES, cfg.coef_vector("assignment").tolist())),
            "centers": dict(zip(FEATURE_NAMES, center.tolist())),
            "scales": dict(zip(FEATURE_NAMES, scale.tolist())),
        },
        "config": cfg.to_dict(),
    }
    if cfg.heterogeneity is not None:
        h = cfg.heterogeneity
        col = X[:, FEATURE_NAMES.index(h.feature)]
        strata = []
        for k, t in enumerate(h.taus):
            in_bin = (col >= h.edges[k]) & (col < h.edges[k + 1])
            strata.append({"lower": h.edges[k], "upper": h.edges[k + 1], "tau": t, "n_units": int(in_bin.sum())})
        manifest["strata"] = {"feature": h.feature, "bins": strata}
    return manifest


def oracle_ate(manifest: dict | str | Path | None) -> float:
    """True ATE stored in a manifest (dict or path to ``manifest.json``)."""
    if manifest is None:
        raise MissingManifest("no manifest given")
    if not isinstance(manifest, dict):
        path = Path(manifest)
        if path.is_dir():
            path = path / "manifest.json"
        if not path.exists():
            raise MissingManifest(f"{path} does not exist")
        manifest = json.loads(path.read_text())
    if "true_tau" not in manifest:
        raise MissingManifest("manifest has no true_tau")
    return float(manifest["true_tau"])


def write_synth(out_dir: str | Path, result: SynthResult, metadata: dict | None = None) -> None:
    from .io import write_csv, write_json
    from .matrix import write_matrix

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "matrix.csv", result.data, metadata)
    oracle = pd.DataFrame({"unit_id": result.data.unit_id, "true_propensity": result.true_propensity,
                           "tau": result.unit_tau})
    write_csv(out / "oracle.csv", oracle, metadata)
    manifest = dict(result.manifest, oracle_file="oracle.csv", matrix_file="matrix.csv")
    write_json(out / "manifest.json", manifest, metadata)


# ---------------------------------------------------------------------------
# pitch-level Markov chain over base-out-count states

PITCH_OUTCOMES = ("ball", "called_strike", "swinging_strike", "foul", "hit_by_pitch", "in_play")
IN_PLAY_OUTCOMES = ("field_out", "double_play", "foul_fly", "sacrifice_fly",
                    "single", "double", "triple", "home_run", "error")
_HITS = ("single", "double", "triple", "home_run", "error")
N_CHAIN_STATES = N_BASE_OUT * N_COUNTS
ABSORB = N_CHAIN_STATES


@dataclass(frozen=True)
class ChainConfig:
    """Per-pitch outcome probabilities; in-play probabilities are conditional on contact.

    ``double_play`` and ``sacrifice_fly`` fall back to a plain field out
    when the base-out state does not allow them.
    """

    pitch: dict = field(default_factory=lambda: {
        "ball": 0.36, "called_strike": 0.17, "swinging_strike": 0.11,
        "foul": 0.18, "hit_by_pitch": 0.005, "in_play": 0.175})
    in_play: dict = field(default_factory=lambda: {
        "field_out": 0.60, "double_play": 0.03, "foul_fly": 0.03, "sacrifice_fly": 0.01,
        "single": 0.22, "double": 0.06, "triple": 0.006, "home_run": 0.03, "error": 0.014})

    def outcome_probs(self) -> tuple[list[str], np.ndarray]:
        names, probs = [], []
        ptot = sum(self.pitch.values())
        itot = sum(self.in_play.values())
        for k in PITCH_OUTCOMES:
            if k == "in_play":
                continue
            names.append(k)
            probs.append(self.pitch.get(k, 0.0) / ptot)
        for k in IN_PLAY_OUTCOMES:
            names.append(k)
            probs.append(self.pitch.get("in_play", 0.0) / ptot * self.in_play.get(k, 0.0) / itot)
        return names, np.array(probs)

    def to_dict(self) -> dict:
        return {"pitch": dict(self.pitch), "in_play": dict(self.in_play)}


def _force(first, second, third):
    runs = int(first and second and third)
    return (True, second or first, third or (first and second)), runs


def _transition(state: int, outcome: str) -> tuple[int, int, EventCode]:
    """Next chain state (or ABSORB), runs on the play, and the event code."""
    base, count = divmod(state, N_COUNTS)
    outs, code = divmod(base, 8)
    b1, b2, b3 = bool(code & 1), bool(code & 2), bool(code & 4)
    balls, strikes = divmod(count, 3)

    def new_pa(o, bases, runs, ev):
        if o >= 3:
            return ABSORB, runs, ev
        f, s, t = bases
        return (o * 8 + int(f) + 2 * int(s) + 4 * int(t)) * N_COUNTS, runs, ev

    def same_pa(bl, st, ev):
        return base * N_COUNTS + bl * 3 + st, 0, ev

    if outcome == "ball":
        if balls < 3:
            return same_pa(balls + 1, strikes, EventCode.BALL)
        bases, runs = _force(b1, b2, b3)
        return new_pa(outs, bases, runs, EventCode.WALK)
    if outcome == "hit_by_pitch":
        bases, runs = _force(b1, b2, b3)
        return new_pa(outs, bases, runs, EventCode.HIT_BY_PITCH)
    if outcome in ("called_strike", "swinging_strike"):
        if strikes < 2:
            return same_pa(balls, strikes + 1, EventCode.STRIKE)
        ev = EventCode.CALLED_STRIKEOUT if outcome == "called_strike" else EventCode.SWINGING_STRIKEOUT
        return new_pa(outs + 1, (b1, b2, b3), 0, ev)
    if outcome == "foul":
        return same_pa(balls, min(strikes + 1, 2), EventCode.STRIKE)
    if outcome == "double_play" and b1 and outs < 2:
        return new_pa(outs + 2, (False, b2, b3), 0, EventCode.DOUBLE_PLAY)
    if outcome == "sacrifice_fly" and b3 and outs < 2:
        return new_pa(outs + 1, (b1, b2, False), 1, EventCode.SACRIFICE_FLY)
    if outcome in ("field_out", "double_play", "sacrifice_fly"):
        return new_pa(outs + 1, (b1, b2, b3), 0, EventCode.FIELD_OUT)
    if outcome == "foul_fly":
        return new_pa(outs + 1, (b1, b2, b3), 0, EventCode.FOUL_FLY)
    if outcome == "single":
        return new_pa(outs, (True, b1, False), int(b2) + int(b3), EventCode.SINGLE)
    if outcome == "double":
        return new_pa(outs, (False, True, b1), int(b2) + int(b3), EventCode.DOUBLE)
    if outcome == "triple":
        return new_pa(outs, (False, False, True), int(b1) + int(b2) + int(b3), EventCode.TRIPLE)
    if outcome == "home_run":
        return new_pa(outs, (False, False, False), 1 + int(b1) + int(b2) + int(b3), EventCode.HOME_RUN)
    if outcome == "error":
        return new_pa(outs, (True, b1, b2), int(b3), EventCode.ERROR)
    raise ValueError(f"unknown outcome {outcome!r}")


_EVENT_LIST = list(EventCode)
_STRIKE_ID = _EVENT_LIST.index(EventCode.STRIKE)
_BALL_ID = _EVENT_LIST.index(EventCode.BALL)


def _transition_tables(names: list[str]):
    nxt = np.empty((N_CHAIN_STATES, len(names)), dtype=np.int64)
    runs = np.empty((N_CHAIN_STATES, len(names)), dtype=np.int64)
    ev = np.empty((N_CHAIN_STATES, len(names)), dtype=np.int64)
    for s in range(N_CHAIN_STATES):
        for k, name in enumerate(names):
            t, r, e = _transition(s, name)
            nxt[s, k], runs[s, k], ev[s, k] = t, r, _EVENT_LIST.index(e)
    return nxt, runs, ev


def exact_run_expectancy(chain: ChainConfig) -> np.ndarray:
    """Expected runs to the end of the half-inning from every base-out-count state.

    Solves (I - Q) E = r for the absorbing chain. Raises
    :class:`NonterminatingChain` if the third out is not reached with
    probability one.
    """
    names, probs = chain.outcome_probs()
    nxt, runs, _ = _transition_tables(names)
    Q = np.zeros((N_CHAIN_STATES, N_CHAIN_STATES))
    absorb = np.zeros(N_CHAIN_STATES)
    for k, p in enumerate(probs):
        if p == 0:
            continue
        to = nxt[:, k]
        live = to != ABSORB
        np.add.at(Q, (np.flatnonzero(live), to[live]), p)
        absorb[~live] += p
    r = runs @ probs
    A = np.eye(N_CHAIN_STATES) - Q
    try:
        absorbed = np.linalg.solve(A, absorb)
        expected = np.linalg.solve(A, r)
    except np.linalg.LinAlgError:
        raise NonterminatingChain("chain has no path to the third out") from None
    if not np.allclose(absorbed, 1.0, atol=1e-8) or not np.all(np.isfinite(expected)):
        raise NonterminatingChain("absorption probability check failed")
    return expected


def calibrate_chain(chain: ChainConfig, target: float = 0.44) -> ChainConfig:
    """Rescale hit outcomes against outs so that RE(0 out, empty, 0-0) hits ``target``."""
    def re0(mult):
        ip = {k: v * (mult if k in _HITS else 1.0) for k, v in chain.in_play.items()}
        return exact_run_expectancy(replace(chain, in_play=ip))[0] - target

    mult = optimize.brentq(re0, 0.05, 10.0, xtol=1e-12)
    ip = {k: v * (mult if k in _HITS else 1.0) for k, v in chain.in_play.items()}
    return replace(chain, in_play=ip)


def pa_outcome_probs(chain: ChainConfig) -> dict[EventCode, float]:
    """Distribution of the plate-appearance result starting from 0-0, nobody on, nobody out.

    With empty bases the double-play and sacrifice-fly draws resolve to
    plain field outs.
    """
    names, probs = chain.outcome_probs()
    Q = np.zeros((N_COUNTS, N_COUNTS))
    R: dict[EventCode, np.ndarray] = {}
    for c in range(N_COUNTS):
        for name, p in zip(names, probs):
            to, _, ev = _transition(c, name)
            if ev in (EventCode.STRIKE, EventCode.BALL):
                Q[c, to] += p
            else:
                R.setdefault(ev, np.zeros(N_COUNTS))[c] += p
    N = np.linalg.inv(np.eye(N_COUNTS) - Q)
    return {ev: float((N @ r)[0]) for ev, r in R.items() if (N @ r)[0] > 0}


# Output of calibrate_chain(ChainConfig(), 0.44), frozen so the preset does
# not depend on root-finder tolerance.
CALIBRATED_CHAIN = ChainConfig(in_play={
    "field_out": 0.60, "double_play": 0.03, "foul_fly": 0.03, "sacrifice_fly": 0.01,
    "single": 0.237472, "double": 0.064765, "triple": 0.006476, "home_run": 0.032382, "error": 0.015112})


def generate_innings(chain: ChainConfig, n_innings: int, seed: int = 0) -> pd.DataFrame:
    """Simulate complete half-innings pitch by pitch.

    Returns one row per pitch, grouped by ``inning_id`` in play order, with
    the before-pitch state, the event code, runs on the play and
    ``pitch_seq_no`` within the plate appearance.
    """
    exact_run_expectancy(chain)  # termination check
    names, probs = chain.outcome_probs()
    nxt, runs_tab, ev_tab = _transition_tables(names)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    state = np.zeros(n_innings, dtype=np.int64)
    active = np.arange(n_innings)
    seq = np.ones(n_innings, dtype=np.int64)
    cols = {"inning_id": [], "step": [], "state": [], "event": [], "runs": [], "seq": []}
    step = 0
    while active.size:
        s = state[active]
        k = np.searchsorted(cdf, rng.random(active.size), side="right")
        k = np.minimum(k, len(probs) - 1)
        cols["inning_id"].append(active)
        cols["step"].append(np.full(active.size, step))
        cols["state"].append(s)
        cols["event"].append(ev_tab[s, k])
        cols["runs"].append(runs_tab[s, k])
        cols["seq"].append(seq[active])
        to = nxt[s, k]
        ev = ev_tab[s, k]
        ended_pa = (ev != _STRIKE_ID) & (ev != _BALL_ID)
        seq[active] = np.where(ended_pa, 1, seq[active] + 1)
        state[active] = to
        active = active[to != ABSORB]
        step += 1
    flat = {k: np.concatenate(v) for k, v in cols.items()}
    order = np.lexsort((flat["step"], flat["inning_id"]))
    st = flat["state"][order]
    base, count = np.divmod(st, N_COUNTS)
    outs, code = np.divmod(base, 8)
    balls, strikes = np.divmod(count, 3)
    ev_values = np.array([e.value for e in _EVENT_LIST], dtype=object)
    frame = pd.DataFrame({
        "inning_id": flat["inning_id"][order],
        "outs": outs,
        "on_first": (code & 1).astype(bool),
        "on_second": (code & 2).astype(bool),
        "on_third": (code & 4).astype(bool),
        "balls": balls,
        "strikes": strikes,
        "pitch_seq_no": flat["seq"][order],
        "outcome": ev_values[flat["event"][order]],
        "runs_scored_on_play": flat["runs"][order],
    })
    frame["terminal"] = ~frame["outcome"].isin([EventCode.STRIKE.value, EventCode.BALL.value])
    return frame


# ---------------------------------------------------------------------------
# season simulator producing pitch-by-pitch CSV rows


@dataclass(frozen=True)
class SeasonConfig:
    n_teams: int = 4
    games_per_pair: int = 14
    batters_per_team: int = 9
    pitchers_per_team: int = 4
    season: int = 2019
    start: tuple[int, int] = (3, 20)
    end: tuple[int, int] = (9, 30)
    four_seam_share: float = 0.5
    excluded_share: float = 0.2
    missing_speed_share: float = 0.02
    seed: int = 0
    chain: ChainConfig = field(default_factory=lambda: CALIBRATED_CHAIN)


def _demand_coords(rng, zone_inside: np.ndarray, excluded: np.ndarray, batter_hand: np.ndarray):
    n = len(zone_inside)
    # "toward first-base side" in pitcher's view is inside for a right-handed batter
    toward_first = np.where(batter_hand == "R", zone_inside, ~zone_inside)
    x = np.where(toward_first, rng.uniform(96, 140, n), rng.uniform(20, 64, n))
    y = rng.uniform(10, 80, n)
    # excluded demands: either high or between the inside/outside thresholds
    high = rng.random(n) < 0.5
    x = np.where(excluded & ~high, rng.uniform(65, 95, n), x)
    y = np.where(excluded & high, rng.uniform(81, 160, n), y)
    return np.round(x, 1), np.round(y, 1)


def simulate_season(cfg: SeasonConfig = SeasonConfig()) -> pd.DataFrame:
    """A round-robin season of 9-inning games as an events frame.

    Each team carries a fixed lineup, a pitching rotation and one catcher.
    Players get persistent inside-demand tendencies, so inside ratios vary
    across players. All half-innings run to three outs.
    """
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    teams = [f"T{t}" for t in range(cfg.n_teams)]
    batters = {t: [f"{t}B{i}" for i in range(cfg.batters_per_team)] for t in teams}
    pitchers = {t: [f"{t}P{i}" for i in range(cfg.pitchers_per_team)] for t in teams}
    all_b = [b for t in teams for b in batters[t]]
    all_p = [p for t in teams for p in pitchers[t]]
    b_hand = dict(zip(all_b, rng.choice(["R", "L"], size=len(all_b), p=[0.6, 0.4])))
    p_hand = dict(zip(all_p, rng.choice(["R", "L"], size=len(all_p), p=[0.7, 0.3])))
    b_tend = dict(zip(all_b, rng.normal(0, 0.5, len(all_b))))
    p_tend = dict(zip(all_p, rng.normal(0, 0.5, len(all_p))))
    p_speed = dict(zip(all_p, rng.normal(144, 3, len(all_p))))

    pairs = [(a, b) for i, a in enumerate(teams) for b in teams[i + 1:]]
    schedule = []
    for g in range(cfg.games_per_pair):
        for a, b in pairs:
            schedule.append((a, b) if g % 2 == 0 else (b, a))
    order = rng.permutation(len(schedule))
    schedule = [schedule[i] for i in order]
    first = date(cfg.season, *cfg.start)
    span = (date(cfg.season, *cfg.end) - first).days
    days = np.sort(rng.integers(0, span + 1, len(schedule)))

    n_games = len(schedule)
    innings = generate_innings(cfg.chain, n_games * 18, seed=int(rng.integers(2**31)))
    inning_id = innings["inning_id"].to_numpy()
    game = inning_id // 18
    half_idx = inning_id % 18
    inning_no = half_idx // 2 + 1
    is_top = half_idx % 2 == 0

    away = np.array([s[0] for s in schedule], dtype=object)[game]
    home = np.array([s[1] for s in schedule], dtype=object)[game]
    batting = np.where(is_top, away, home)
    fielding = np.where(is_top, home, away)
    starts = {t: 0 for t in teams}
    game_pitcher = {}
    for g, (a, h) in enumerate(schedule):
        for t in (a, h):
            game_pitcher[(g, t)] = pitchers[t][starts[t] % cfg.pitchers_per_team]
            starts[t] += 1
    pitcher = np.array([game_pitcher[(g, t)] for g, t in zip(game, fielding)], dtype=object)

    frame = innings.copy()
    side = game * 2 + (~is_top).astype(int)
    pa_start = np.r_[True, frame["terminal"].to_numpy()[:-1]] | np.r_[True, inning_id[1:] != inning_id[:-1]]
    pa_idx = pd.Series(pa_start.astype(int)).groupby(side).cumsum().to_numpy() - 1
    slot = pa_idx % cfg.batters_per_team
    batter = np.array([batters[t][s] for t, s in zip(batting, slot)], dtype=object)

    runs = frame["runs_scored_on_play"].to_numpy()
    away_runs = np.where(is_top, runs, 0)
    home_runs = np.where(is_top, 0, runs)
    away_before = pd.Series(away_runs).groupby(game).cumsum().to_numpy() - away_runs
    home_before = pd.Series(home_runs).groupby(game).cumsum().to_numpy() - home_runs
    run_diff = np.where(is_top, home_before - away_before, away_before - home_before)
    total_pitches = pd.Series(np.ones(len(frame), dtype=int)).groupby(side).cumsum().to_numpy()

    n = len(frame)
    bh = np.array([b_hand[b] for b in batter])
    ph = np.array([p_hand[p] for p in pitcher])
    logit = math.log(0.32 / 0.68) + np.array([b_tend[b] for b in batter]) + np.array([p_tend[p] for p in pitcher])
    inside = rng.random(n) < special.expit(logit)
    excluded = rng.random(n) < cfg.excluded_share
    dx, dy = _demand_coords(rng, inside, excluded, bh)
    four = rng.random(n) < cfg.four_seam_share
    speed = np.where(four, np.array([p_speed[p] for p in pitcher]) + rng.normal(0, 2, n),
                     np.array([p_speed[p] for p in pitcher]) - 12 + rng.normal(0, 4, n))
    speed = np.round(speed, 1)
    speed[rng.random(n) < cfg.missing_speed_share] = np.nan
    ax = np.round(np.clip(dx + rng.normal(0, 12, n), 0, 160), 1)
    ay = np.round(np.clip(dy + rng.normal(0, 14, n), 0, 200), 1)

    game_ids = np.array([f"{cfg.season}-{g:04d}" for g in range(n_games)], dtype=object)
    dates = np.array([first + timedelta(days=int(d)) for d in days], dtype=object)
    catcher = np.array([f"{t}C0" for t in fielding], dtype=object)
    out = pd.DataFrame({
        "game_id": game_ids[game],
        "date": pd.to_datetime(dates[game]),
        "inning": inning_no,
        "half": np.where(is_top, "top", "bottom"),
        "pitcher_id": pitcher,
        "batter_id": batter,
        "catcher_id": catcher,
        "balls": frame["balls"].to_numpy(),
        "strikes": frame["strikes"].to_numpy(),
        "outs": frame["outs"].to_numpy(),
        "on_first": frame["on_first"].to_numpy(),
        "on_second": frame["on_second"].to_numpy(),
        "on_third": frame["on_third"].to_numpy(),
        "run_diff": run_diff,
        "pitch_seq_no": frame["pitch_seq_no"].to_numpy(),
        "pitcher_total_pitches": total_pitches,
        "pitch_type": np.where(four, "four_seam", "slider"),
        "pitch_speed": speed,
        "demand_x": dx,
        "demand_y": dy,
        "actual_x": ax,
        "actual_y": ay,
        "pitcher_hand": ph,
        "batter_hand": bh,
        "outcome": frame["outcome"].to_numpy(),
        "runs_scored_on_play": runs,
    })
    from .ingest import finalize_frame

    return finalize_frame(out)
