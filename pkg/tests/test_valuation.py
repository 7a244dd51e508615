import numpy as np
import pandas as pd
import pytest

from pitchipw.codes import EventCode
from pitchipw.errors import IncompleteInning
from pitchipw.synth import CALIBRATED_CHAIN, exact_run_expectancy, generate_innings
from pitchipw.valuation import (ALL_STATES, BaseOutState, EventValueTable, RunExpectancyTable, build_event_value_table,
                                build_re_table, delta_re, event_values_from_frame, occurrence_delta_re)

EMPTY0 = BaseOutState(0, False, False, False)
EMPTY1 = BaseOutState(1, False, False, False)


def pbp(rows):
    """rows: (inning_id, outs, bases 'xyz', balls, strikes, outcome, runs)."""
    return pd.DataFrame({
        "inning_id": [r[0] for r in rows],
        "outs": [r[1] for r in rows],
        "on_first": [r[2][0] == "1" for r in rows],
        "on_second": [r[2][1] == "1" for r in rows],
        "on_third": [r[2][2] == "1" for r in rows],
        "balls": [r[3] for r in rows],
        "strikes": [r[4] for r in rows],
        "outcome": [r[5] for r in rows],
        "runs_scored_on_play": [r[6] for r in rows],
    })


def table_with(values: dict) -> RunExpectancyTable:
    v = np.zeros(24)
    for s, x in values.items():
        v[s.index] = x
    return RunExpectancyTable(v, np.ones(24, dtype=int))


def test_state_indexing():
    assert len({s.index for s in ALL_STATES}) == 24
    s = BaseOutState(2, True, False, True)
    assert s.index == 2 * 8 + 1 + 4
    assert BaseOutState.from_index(s.index) == s
    assert s.label() == "2|101"


def test_delta_re_examples():
    t = table_with({EMPTY0: 0.44, EMPTY1: 0.25})
    assert delta_re(EMPTY0, EMPTY0, 0, t) == 0.0
    assert delta_re(EMPTY0, EMPTY1, 0, t) == pytest.approx(-0.19, abs=1e-15)
    assert delta_re(EMPTY0, EMPTY0, 1, t) == 1.0
    assert delta_re(EMPTY0, EMPTY0, 1, t, include_runs_on_play=False) == 0.0
    # third out: RE_after is zero
    assert delta_re(BaseOutState(2, False, False, False), None, 0, table_with({BaseOutState(2, False, False, False): 0.1})) == -0.1


def test_delta_re_linear_in_table():
    rng = np.random.default_rng(0)
    a = RunExpectancyTable(rng.random(24), np.ones(24, dtype=int))
    b = RunExpectancyTable(rng.random(24), np.ones(24, dtype=int))
    ab = RunExpectancyTable(2 * a.values + 3 * b.values, np.ones(24, dtype=int))
    s, t = ALL_STATES[3], ALL_STATES[17]
    lhs = delta_re(s, t, 0, ab, include_runs_on_play=False)
    rhs = 2 * delta_re(s, t, 0, a, False) + 3 * delta_re(s, t, 0, b, False)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_single_then_three_outs_contributes_zero(quiet):
    frame = pbp([
        (0, 0, "000", 0, 0, "single", 0),
        (0, 0, "100", 0, 0, "field_out", 0),
        (0, 1, "100", 0, 0, "field_out", 0),
        (0, 2, "100", 0, 0, "field_out", 0),
    ])
    t = build_re_table(frame)
    assert t[EMPTY0] == 0.0 and t.count(EMPTY0) == 1
    assert t.count(BaseOutState(1, True, False, False)) == 1


def test_constant_one_run(quiet):
    rows = []
    for i in range(5):
        rows += [(i, 0, "000", 0, 0, "home_run", 1), (i, 0, "000", 0, 0, "field_out", 0),
                 (i, 1, "000", 0, 0, "field_out", 0), (i, 2, "000", 0, 0, "field_out", 0)]
    t = build_re_table(pbp(rows))
    # (0, empty) occurs twice per inning: before the homer (1 run follows) and after it (0 runs)
    assert t.count(EMPTY0) == 10
    assert t[EMPTY0] == pytest.approx(0.5)
    assert t[EMPTY1] == 0.0


def test_pa_start_counting_ignores_mid_pa_pitches(quiet):
    rows = [(0, 0, "000", 0, 0, "ball", 0), (0, 0, "000", 1, 0, "strike", 0), (0, 0, "000", 1, 1, "home_run", 1),
            (0, 0, "000", 0, 0, "field_out", 0), (0, 1, "000", 0, 0, "field_out", 0), (0, 2, "000", 0, 0, "field_out", 0)]
    t = build_re_table(pbp(rows))
    assert t.count(EMPTY0) == 2 and t[EMPTY0] == pytest.approx(0.5)
    tc = build_re_table(pbp(rows), by_count=True)
    assert tc.count((EMPTY0, 0, 0)) == 2
    assert tc[(EMPTY0, 1, 1)] == 1.0
    assert tc.count((EMPTY0, 1, 0)) == 1


def test_incomplete_inning():
    frame = pbp([(0, 0, "000", 0, 0, "field_out", 0), (0, 1, "000", 0, 0, "single", 0)])
    with pytest.raises(IncompleteInning):
        build_re_table(frame)
    with pytest.warns(UserWarning):
        t = build_re_table(frame, skip_incomplete=True)
    assert t.sample_n.sum() == 0


def test_unobserved_states_warn():
    frame = pbp([(0, 0, "000", 0, 0, "field_out", 0), (0, 1, "000", 0, 0, "field_out", 0),
                 (0, 2, "000", 0, 0, "field_out", 0)])
    with pytest.warns(UserWarning, match="never observed"):
        t = build_re_table(frame)
    assert t.count(BaseOutState(0, True, True, True)) == 0
    assert t[BaseOutState(0, True, True, True)] == 0.0


def test_event_value_table_examples():
    t = build_event_value_table([("strike", -0.04), ("strike", -0.036)])
    assert t["strike"] == pytest.approx(-0.038, abs=1e-15)
    assert t.sample_n[EventCode.STRIKE] == 2
    one = build_event_value_table([(EventCode.WALK, 0.292)])
    assert one[EventCode.WALK] == 0.292 and one.sample_n[EventCode.WALK] == 1
    with pytest.raises(ValueError):
        build_event_value_table([])


def test_event_value_sign_warning():
    with pytest.warns(UserWarning, match="strike < 0 < ball"):
        build_event_value_table([("strike", 0.1), ("ball", 0.2)])


def test_telescoping_on_small_sample(quiet):
    frame = generate_innings(CALIBRATED_CHAIN, 200, seed=4)
    t = build_re_table(frame, by_count=True)
    d = occurrence_delta_re(frame, t)
    start = t.values[0]
    per = pd.DataFrame({"i": frame["inning_id"], "d": d, "r": frame["runs_scored_on_play"]}).groupby("i").sum()
    assert np.allclose(per["d"], per["r"] - start, atol=1e-9)


def test_table_serialisation_round_trip(quiet):
    frame = generate_innings(CALIBRATED_CHAIN, 300, seed=1)
    for by_count in (False, True):
        t = build_re_table(frame, by_count=by_count)
        for back in (RunExpectancyTable.from_frame(t.to_frame()), RunExpectancyTable.from_dict(t.to_dict())):
            assert np.array_equal(back.values, t.values) and np.array_equal(back.sample_n, t.sample_n)
            assert back.by_count == by_count
    ev = event_values_from_frame(frame, build_re_table(frame, by_count=True))
    assert EventValueTable.from_frame(ev.to_frame()) == ev
    assert EventValueTable.from_dict(ev.to_dict()) == ev


def test_count_aware_values_match_exact_chain(quiet):
    frame = generate_innings(CALIBRATED_CHAIN, 40_000, seed=9)
    t = build_re_table(frame, by_count=True)
    exact = exact_run_expectancy(CALIBRATED_CHAIN)
    busy = t.sample_n >= 2000
    assert busy.sum() > 30
    # runs-to-end have sd below 1.6 in every state; allow five standard errors
    tol = 5 * 1.6 / np.sqrt(t.sample_n[busy])
    assert np.all(np.abs(t.values[busy] - exact[busy]) < tol)


def test_strike_below_zero_below_ball_with_count_table(quiet):
    frame = generate_innings(CALIBRATED_CHAIN, 20_000, seed=2)
    ev = event_values_from_frame(frame, build_re_table(frame, by_count=True))
    assert ev["strike"] < 0 < ev["ball"]
    assert ev["home_run"] > 1.0
