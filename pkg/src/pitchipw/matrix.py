"""The unit-of-analysis table: 18 confounders, treatment flag and outcome per pitch."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .io import read_csv, write_csv

FEATURE_NAMES = (
    # game situation
    "ball_count",
    "out_count",
    "runner_code",
    "run_diff",
    "same_hand",
    # pitcher
    "total_pitch_in_game",
    "result_1_ago",
    "result_2_ago",
    "speed_1_ago",
    "speed_2_ago",
    "conf_inside_fast",
    "conf_inside_slow",
    "conf_fourseam_fast",
    "conf_fourseam_slow",
    "prev_batting_result",
    "pitcher_inside_ratio",
    # batter
    "batter_inside_ratio",
    "batter_woba",
)
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class TreatmentData:
    """Column-oriented treatment records.

    ``z`` is 1 for an inside demand; ``y`` is the run-value outcome; ``p`` is
    the (clipped) propensity once a model has been applied.
    """

    unit_id: np.ndarray
    X: np.ndarray
    z: np.ndarray
    y: np.ndarray
    p: np.ndarray | None = None
    feature_names: tuple[str, ...] = FEATURE_NAMES
    game_id: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.z)
        if self.X.shape != (n, len(self.feature_names)):
            raise ValueError(f"X has shape {self.X.shape}, expected ({n}, {len(self.feature_names)})")
        if len(self.y) != n or len(self.unit_id) != n:
            raise ValueError("unit_id, X, z and y must have equal length")
        if self.p is not None and len(self.p) != n:
            raise ValueError("p must match the number of units")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("outcomes must be finite")

    def __len__(self) -> int:
        return len(self.z)

    def with_propensity(self, p) -> "TreatmentData":
        return replace(self, p=np.asarray(p, dtype=float))

    def subset(self, mask) -> "TreatmentData":
        idx = np.asarray(mask)
        return replace(
            self,
            unit_id=self.unit_id[idx],
            X=self.X[idx],
            z=self.z[idx],
            y=self.y[idx],
            p=None if self.p is None else self.p[idx],
            game_id=None if self.game_id is None else self.game_id[idx],
        )

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.feature_names.index(name)]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.X, columns=list(self.feature_names))
        frame.insert(0, "unit_id", self.unit_id)
        frame["Z"] = self.z.astype(int)
        frame["Y"] = self.y
        if self.game_id is not None:
            frame["game_id"] = self.game_id
        if self.p is not None:
            frame["p"] = self.p
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, feature_names=FEATURE_NAMES) -> "TreatmentData":
        missing = [c for c in ("unit_id", "Z", "Y", *feature_names) if c not in frame.columns]
        if missing:
            raise ValueError(f"matrix is missing column(s): {', '.join(missing)}")
        return cls(
            unit_id=frame["unit_id"].to_numpy(),
            X=frame[list(feature_names)].to_numpy(dtype=float),
            z=frame["Z"].to_numpy(dtype=int),
            y=frame["Y"].to_numpy(dtype=float),
            p=frame["p"].to_numpy(dtype=float) if "p" in frame.columns else None,
            feature_names=tuple(feature_names),
            game_id=frame["game_id"].astype(str).to_numpy() if "game_id" in frame.columns else None,
        )


def write_matrix(path: str | Path, data: TreatmentData, metadata: dict | None = None) -> None:
    write_csv(path, data.to_frame(), metadata)


def read_matrix(path: str | Path) -> TreatmentData:
    frame = read_csv(path, dtype={"game_id": str})
    return TreatmentData.from_frame(frame)
