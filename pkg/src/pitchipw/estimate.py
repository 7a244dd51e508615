"""IPW average treatment effect, naive comparison, bootstrap intervals, strata.

Sign convention: ``tau`` is inside minus outside (Z=1 minus Z=0) in runs
per pitch, so a positive value means inside demands cost the defence runs.
Reports also carry the outside-advantage figure, which is ``-tau``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import (EmptyPartition, NoControl, NoTreated, PropensityOutOfRange, TooFewValidResamples,
                     UnknownFeature)
from .matrix import TreatmentData

MAX_REDRAW_FRACTION = 0.10


@dataclass(frozen=True)
class IpwEstimate:
    tau: float
    ey1: float
    ey0: float


def _check_inputs(z, p):
    if not np.any(z == 1):
        raise NoTreated("no treated (inside) units")
    if not np.any(z == 0):
        raise NoControl("no control (outside) units")
    if p is None:
        raise PropensityOutOfRange("records carry no propensities")
    if np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p >= 1):
        raise PropensityOutOfRange("propensities must lie strictly inside (0, 1)")


def ipw_weights(z, p) -> np.ndarray:
    """z/p for treated units, (1-z)/(1-p) for controls."""
    z = np.asarray(z)
    p = np.asarray(p, dtype=float)
    return np.where(z == 1, 1.0 / p, 1.0 / (1.0 - p))


def ipw_ate(z, y, p, normalized: bool = True) -> IpwEstimate:
    """Self-normalised (Hajek) IPW means and their difference.

    ``normalized=False`` gives the Horvitz-Thompson form, dividing the
    weighted sums by N instead of by the summed weights.
    """
    z = np.asarray(z)
    y = np.asarray(y, dtype=float)
    p = None if p is None else np.asarray(p, dtype=float)
    _check_inputs(z, p)
    t = z == 1
    w1 = 1.0 / p[t]
    w0 = 1.0 / (1.0 - p[~t])
    if normalized:
        ey1 = np.sum(y[t] * w1) / np.sum(w1)
        ey0 = np.sum(y[~t] * w0) / np.sum(w0)
    else:
        ey1 = np.sum(y[t] * w1) / len(z)
        ey0 = np.sum(y[~t] * w0) / len(z)
    return IpwEstimate(float(ey1 - ey0), float(ey1), float(ey0))


def ipw_ate_records(data: TreatmentData, normalized: bool = True) -> IpwEstimate:
    return ipw_ate(data.z, data.y, data.p, normalized)


@dataclass(frozen=True)
class NaiveResult:
    inside_minus_outside: float
    outside_minus_inside: float
    mean_inside: float
    mean_outside: float


def naive_diff(z, y) -> NaiveResult:
    z = np.asarray(z)
    y = np.asarray(y, dtype=float)
    if not np.any(z == 1):
        raise NoTreated("no treated (inside) units")
    if not np.any(z == 0):
        raise NoControl("no control (outside) units")
    m1 = float(y[z == 1].mean())
    m0 = float(y[z == 0].mean())
    return NaiveResult(m1 - m0, m0 - m1, m1, m0)


def kish_ess(w) -> float:
    w = np.asarray(w, dtype=float)
    s2 = float(np.sum(w * w))
    return float(np.sum(w)) ** 2 / s2 if s2 > 0 else 0.0


@dataclass
class AteResult:
    tau_hat: float
    ey1_hat: float
    ey0_hat: float
    ci_low: float
    ci_high: float
    level: float
    n_treated: int
    n_control: int
    n_bootstrap: int
    seed: int
    boot_mean: float
    boot_sd: float
    redraws: int
    ess_treated: float
    ess_control: float
    ci_low_centered: float = float("nan")  # same width, centred on tau_hat
    ci_high_centered: float = float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outside_minus_inside"] = -self.tau_hat
        d["ci_outside_minus_inside"] = [-self.ci_high, -self.ci_low]
        return d


def normal_quantile(level: float) -> float:
    return float(stats.norm.ppf((1 + level) / 2))


def bootstrap_taus(z, y, p, B: int, seed: int, clusters=None, normalized: bool = True):
    """B valid resampled estimates plus the number of redraws.

    Replicate ``b`` draws from ``SeedSequence(seed, spawn_key=(b,))``; a
    replicate that lacks a treated or control unit is redrawn from the
    same stream. With ``clusters`` whole clusters are resampled.
    """
    z = np.asarray(z)
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    n = len(z)
    if clusters is not None:
        labels, members = np.unique(np.asarray(clusters), return_inverse=True)
        order = np.argsort(members, kind="stable")
        bounds = np.searchsorted(members[order], np.arange(len(labels) + 1))
        groups = [order[bounds[g]:bounds[g + 1]] for g in range(len(labels))]
    taus = np.empty(B)
    redraws = 0
    limit = MAX_REDRAW_FRACTION * B
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        while True:
            if clusters is None:
                idx = rng.integers(0, n, n)
            else:
                pick = rng.integers(0, len(groups), len(groups))
                idx = np.concatenate([groups[g] for g in pick])
            try:
                taus[b] = ipw_ate(z[idx], y[idx], p[idx], normalized).tau
                break
            except (NoTreated, NoControl):
                redraws += 1
                if redraws > limit:
                    raise TooFewValidResamples(f"more than {MAX_REDRAW_FRACTION:.0%} of {B} resamples lacked a group")
    return taus, redraws


def bootstrap_ci(data: TreatmentData, B: int = 2000, level: float = 0.99, seed: int = 0,
                 cluster_by_game: bool = False, normalized: bool = True,
                 estimator: Callable | None = None) -> AteResult:
    """Normal-approximation bootstrap interval: resample mean +- z * resample sd.

    The centred variant (same width around the full-sample estimate) is
    reported alongside.
    """
    if B < 2:
        raise ValueError("B must be >= 2")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    estimator = estimator or ipw_ate
    point = estimator(data.z, data.y, data.p, normalized)
    clusters = None
    if cluster_by_game:
        if data.game_id is None:
            raise ValueError("cluster-by-game needs a game_id column")
        clusters = data.game_id
    taus, redraws = bootstrap_taus(data.z, data.y, data.p, B, seed, clusters, normalized)
    m = float(taus.mean())
    s = float(taus.std(ddof=1))
    q = normal_quantile(level)
    w = ipw_weights(data.z, data.p)
    t = data.z == 1
    return AteResult(
        tau_hat=point.tau, ey1_hat=point.ey1, ey0_hat=point.ey0,
        ci_low=m - q * s, ci_high=m + q * s, level=level,
        n_treated=int(t.sum()), n_control=int((~t).sum()),
        n_bootstrap=B, seed=seed, boot_mean=m, boot_sd=s, redraws=redraws,
        ess_treated=kish_ess(w[t]), ess_control=kish_ess(w[~t]),
        ci_low_centered=point.tau - q * s, ci_high_centered=point.tau + q * s,
    )


@dataclass
class StratumResult:
    stratify_feature: str
    bin_lower: float
    bin_upper: float
    n_units: int
    included: bool
    ate: AteResult | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "stratify_feature": self.stratify_feature,
            "bin_lower": _json_float(self.bin_lower),
            "bin_upper": _json_float(self.bin_upper),
            "n_units": self.n_units,
            "included": self.included,
            "reason": self.reason,
            "ate": None if self.ate is None else self.ate.to_dict(),
        }


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def stratified_ate(data: TreatmentData, feature_name: str, bin_edges: Sequence[float], min_n: int = 10_000,
                   B: int = 2000, level: float = 0.99, seed: int = 0, cluster_by_game: bool = False) -> list[StratumResult]:
    """IPW + bootstrap inside each bin [edges[k], edges[k+1]) of one confounder.

    The last bin is closed on the right. Propensities come from the global
    model; they are not refitted per bin. Bins with fewer than ``min_n``
    units are reported with ``included=False``.
    """
    if feature_name not in data.feature_names:
        raise UnknownFeature(f"no feature named {feature_name!r}")
    edges = np.asarray(bin_edges, dtype=float)
    if len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing with at least two values")
    x = data.column(feature_name)
    results = []
    for k in range(len(edges) - 1):
        lo, hi = edges[k], edges[k + 1]
        last = k == len(edges) - 2
        mask = (x >= lo) & ((x <= hi) if last else (x < hi))
        n = int(mask.sum())
        if n < min_n:
            results.append(StratumResult(feature_name, lo, hi, n, False, None, "insufficient sample"))
            continue
        sub = data.subset(mask)
        try:
            ate = bootstrap_ci(sub, B=B, level=level, seed=seed, cluster_by_game=cluster_by_game)
        except (NoTreated, NoControl, TooFewValidResamples) as exc:
            results.append(StratumResult(feature_name, lo, hi, n, False, None, f"estimator failed: {exc}"))
            continue
        results.append(StratumResult(feature_name, lo, hi, n, True, ate))
    if not any(r.included for r in results):
        raise EmptyPartition(f"every bin of {feature_name} has fewer than {min_n} units")
    return results
