"""Balance, overlap and variable-importance checks for a fitted propensity model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import Degenerate, DimensionMismatch, EmptyGroup
from .estimate import ipw_weights, kish_ess
from .matrix import TreatmentData

ASAM_THRESHOLD = 0.1


def _weighted_moments(x: np.ndarray, w: np.ndarray | None) -> tuple[float, float, float]:
    """Mean, population variance and (effective) size."""
    if w is None:
        return float(x.mean()), float(x.var()), float(len(x))
    m = float(np.sum(w * x) / np.sum(w))
    v = float(np.sum(w * (x - m) ** 2) / np.sum(w))
    return m, v, kish_ess(w)


def asam(x_in, x_out, w_in=None, w_out=None, weighted_variance: bool = True) -> float:
    """Absolute standardised mean difference between two groups.

    The scale is the pooled population standard deviation
    ``sqrt((n_in s_in^2 + n_out s_out^2) / (n_in + n_out))``. With weights,
    means and variances are weighted and Kish effective sizes stand in for
    the group sizes; ``weighted_variance=False`` weights only the means
    and keeps the unweighted pooled scale.
    """
    x_in = np.asarray(x_in, dtype=float)
    x_out = np.asarray(x_out, dtype=float)
    if len(x_in) == 0 or len(x_out) == 0:
        raise EmptyGroup("both groups need at least one unit")
    if (w_in is None) != (w_out is None):
        raise ValueError("give weights for both groups or neither")
    w_in = None if w_in is None else np.asarray(w_in, dtype=float)
    w_out = None if w_out is None else np.asarray(w_out, dtype=float)
    m1, v1, n1 = _weighted_moments(x_in, w_in)
    m0, v0, n0 = _weighted_moments(x_out, w_out)
    if w_in is not None and not weighted_variance:
        _, v1, n1 = _weighted_moments(x_in, None)
        _, v0, n0 = _weighted_moments(x_out, None)
    pooled = (n1 * v1 + n0 * v0) / (n1 + n0)
    # tolerance absorbs rounding in variances of constant columns
    scale = max(abs(m1), abs(m0), 1.0)
    if pooled <= (1e-12 * scale) ** 2:
        raise Degenerate("pooled standard deviation is zero")
    return abs(m1 - m0) / math.sqrt(pooled)


@dataclass
class BalanceRow:
    name: str
    asam_before: float
    asam_after: float
    passed: bool
    degenerate: bool = False


@dataclass
class BalanceReport:
    rows: list[BalanceRow]
    threshold: float = ASAM_THRESHOLD

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows if not r.degenerate)

    def failing(self) -> list[BalanceRow]:
        return [r for r in self.rows if not r.passed and not r.degenerate]

    def max_before(self) -> float:
        return max((r.asam_before for r in self.rows if not r.degenerate), default=float("nan"))

    def max_after(self) -> float:
        return max((r.asam_after for r in self.rows if not r.degenerate), default=float("nan"))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "feature": [r.name for r in self.rows],
            "asam_before": [r.asam_before for r in self.rows],
            "asam_after": [r.asam_after for r in self.rows],
            "pass": [int(r.passed) for r in self.rows],
            "degenerate": [int(r.degenerate) for r in self.rows],
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, threshold: float = ASAM_THRESHOLD) -> "BalanceReport":
        rows = [BalanceRow(str(f), float(b), float(a), bool(p), bool(d)) for f, b, a, p, d in zip(
            frame["feature"], frame["asam_before"], frame["asam_after"], frame["pass"], frame["degenerate"])]
        return cls(rows, threshold)


def balance_report(data: TreatmentData, threshold: float = ASAM_THRESHOLD,
                   weighted_variance: bool = True) -> BalanceReport:
    """ASAM per feature, unweighted and under IPW weights, sorted by the unweighted value.

    A constant feature yields a row flagged ``degenerate`` with NaN values.
    """
    if data.p is None:
        raise ValueError("balance needs propensities")
    t = data.z == 1
    if not t.any() or t.all():
        raise EmptyGroup("both treatment groups need at least one unit")
    w = ipw_weights(data.z, data.p)
    rows = []
    for j, name in enumerate(data.feature_names):
        x = data.X[:, j]
        try:
            before = asam(x[t], x[~t])
            after = asam(x[t], x[~t], w[t], w[~t], weighted_variance)
        except Degenerate:
            rows.append(BalanceRow(name, float("nan"), float("nan"), False, True))
            continue
        rows.append(BalanceRow(name, before, after, after < threshold))
    rows.sort(key=lambda r: (r.degenerate, -r.asam_before if not r.degenerate else 0.0))
    return BalanceReport(rows, threshold)


@dataclass
class OverlapHistogram:
    bin_edges: np.ndarray
    density_treated: np.ndarray
    density_control: np.ndarray
    weighted_density_treated: np.ndarray
    weighted_density_control: np.ndarray

    def l1_unweighted(self) -> float:
        return float(np.sum(np.abs(self.density_treated - self.density_control) * np.diff(self.bin_edges)))

    def l1_weighted(self) -> float:
        return float(np.sum(np.abs(self.weighted_density_treated - self.weighted_density_control)
                            * np.diff(self.bin_edges)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "bin_lower": self.bin_edges[:-1],
            "bin_upper": self.bin_edges[1:],
            "density_treated": self.density_treated,
            "density_control": self.density_control,
            "weighted_density_treated": self.weighted_density_treated,
            "weighted_density_control": self.weighted_density_control,
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "OverlapHistogram":
        edges = np.r_[frame["bin_lower"].to_numpy(float), frame["bin_upper"].to_numpy(float)[-1:]]
        return cls(edges, *(frame[c].to_numpy(float) for c in (
            "density_treated", "density_control", "weighted_density_treated", "weighted_density_control")))


def overlap_histogram(data: TreatmentData, n_bins: int = 20) -> OverlapHistogram:
    """Per-group densities of the propensity on [0, 1], plain and IPW-weighted."""
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    if data.p is None:
        raise ValueError("overlap needs propensities")
    t = data.z == 1
    if not t.any() or t.all():
        raise EmptyGroup("both treatment groups need at least one unit")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    w = ipw_weights(data.z, data.p)

    def dens(mask, weights=None):
        h, _ = np.histogram(data.p[mask], bins=edges, weights=None if weights is None else weights[mask], density=True)
        return h

    return OverlapHistogram(edges, dens(t), dens(~t), dens(t, w), dens(~t, w))


def log_loss(z, p, eps: float = 1e-15) -> float:
    p = np.clip(np.asarray(p, dtype=float), eps, 1 - eps)
    z = np.asarray(z, dtype=float)
    return float(-np.mean(z * np.log(p) + (1 - z) * np.log(1 - p)))


@dataclass
class Importance:
    feature: str
    importance: float
    sd: float


def permutation_importance(model, data: TreatmentData, n_repeats: int = 5, seed: int = 0) -> list[Importance]:
    """Mean increase in log-loss of the model's propensities when one column is shuffled.

    Repeat r of feature j shuffles with ``SeedSequence(seed, spawn_key=(j, r))``.
    Sorted by importance, descending; ties keep feature order.
    """
    if len(data) == 0:
        raise ValueError("no records")
    if data.X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, records have {data.X.shape[1]}")
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    base = log_loss(data.z, model.predict(data.X))
    out = []
    for j, name in enumerate(data.feature_names):
        deltas = []
        for r in range(n_repeats):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j, r)))
            X = data.X.copy()
            X[:, j] = X[rng.permutation(len(X)), j]
            deltas.append(log_loss(data.z, model.predict(X)) - base)
        deltas = np.asarray(deltas)
        out.append(Importance(name, float(deltas.mean()), float(deltas.std(ddof=1)) if n_repeats > 1 else 0.0))
    order = sorted(range(len(out)), key=lambda k: (-out[k].importance, k))
    return [out[k] for k in order]


def importance_frame(items: list[Importance]) -> pd.DataFrame:
    return pd.DataFrame({"rank": np.arange(1, len(items) + 1), "feature": [i.feature for i in items],
                         "importance": [i.importance for i in items], "sd": [i.sd for i in items]})
