import csv
import warnings

import numpy as np
import pytest

from pitchipw.ingest import FIELD_NAMES

BASE_ROW = {
    "game_id": "G1", "date": "2019-07-02", "inning": "1", "half": "top",
    "pitcher_id": "P1", "batter_id": "B1", "catcher_id": "C1",
    "balls": "0", "strikes": "0", "outs": "0",
    "on_first": "0", "on_second": "0", "on_third": "0",
    "run_diff": "0", "pitch_seq_no": "1", "pitcher_total_pitches": "1",
    "pitch_type": "four_seam", "pitch_speed": "145.0",
    "demand_x": "100", "demand_y": "70", "actual_x": "101", "actual_y": "72",
    "pitcher_hand": "R", "batter_hand": "R", "outcome": "strike", "runs_scored_on_play": "0",
}


def pitch_row(**kw):
    row = dict(BASE_ROW)
    row.update({k: str(v) for k, v in kw.items()})
    return row


def write_pitch_csv(path, rows, columns=FIELD_NAMES):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return path


@pytest.fixture
def three_rows():
    return [
        pitch_row(pitch_seq_no=1, pitcher_total_pitches=1),
        pitch_row(pitch_seq_no=2, pitcher_total_pitches=2, strikes=1, outcome="ball"),
        pitch_row(pitch_seq_no=3, pitcher_total_pitches=3, strikes=1, balls=1, outcome="single"),
    ]


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


@pytest.fixture(scope="session")
def season_frame():
    from pitchipw.synth import SeasonConfig, simulate_season

    return simulate_season(SeasonConfig(seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
