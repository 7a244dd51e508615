import json
import math

import numpy as np
import pandas as pd
import pytest

from pitchipw.errors import DegenerateAssignment, MissingManifest, NonterminatingChain
from pitchipw.estimate import ipw_ate, naive_diff
from pitchipw.synth import (CALIBRATED_CHAIN, PRESETS, ChainConfig, Heterogeneity, SynthConfig, calibrate_chain,
                            exact_run_expectancy, generate, generate_innings, oracle_ate, preset_config,
                            write_synth)
from pitchipw.valuation import build_re_table

HR_ONLY = lambda q: ChainConfig(pitch={"in_play": 1.0}, in_play={"home_run": q, "field_out": 1 - q})


@pytest.mark.parametrize("q", [0.1, 0.2, 0.35])
def test_home_run_chain_closed_form(q):
    # runs before the third out are a negative binomial count: E = k q / (1 - q) with k outs left
    re = exact_run_expectancy(HR_ONLY(q))
    for outs in range(3):
        assert re[outs * 8 * 12] == pytest.approx((3 - outs) * q / (1 - q), abs=1e-12)


def test_outs_only_chain_gives_zero_table(quiet):
    chain = ChainConfig(pitch={"in_play": 1.0}, in_play={"field_out": 1.0})
    assert np.all(exact_run_expectancy(chain) == 0)
    frame = generate_innings(chain, 50, seed=0)
    assert len(frame) == 150
    assert (frame.groupby("inning_id").size() == 3).all()
    assert np.all(build_re_table(frame).values == 0)


def test_nonterminating_chain():
    with pytest.raises(NonterminatingChain):
        exact_run_expectancy(ChainConfig(pitch={"in_play": 1.0}, in_play={"single": 1.0}))


def test_calibration_hits_target():
    assert exact_run_expectancy(CALIBRATED_CHAIN)[0] == pytest.approx(0.44, abs=1e-4)
    tuned = calibrate_chain(ChainConfig(), 0.5)
    assert exact_run_expectancy(tuned)[0] == pytest.approx(0.5, abs=1e-9)


def test_innings_structure():
    frame = generate_innings(CALIBRATED_CHAIN, 500, seed=3)
    again = generate_innings(CALIBRATED_CHAIN, 500, seed=3)
    pd.testing.assert_frame_equal(frame, again)
    first = frame.groupby("inning_id").head(1)
    assert (first[["outs", "balls", "strikes"]] == 0).all().all()
    assert not first[["on_first", "on_second", "on_third"]].any().any()
    assert frame["balls"].max() <= 3 and frame["strikes"].max() <= 2


def test_monte_carlo_re_near_exact():
    frame = generate_innings(CALIBRATED_CHAIN, 30_000, seed=8)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t = build_re_table(frame)
    assert t.values[0] == pytest.approx(0.44, abs=0.03)


def test_randomized_preset_has_half_propensity():
    res = generate(preset_config("randomized", n_units=2000, seed=1))
    assert np.all(res.true_propensity == 0.5)
    assert res.data.p is None


def test_zero_noise_zero_baseline():
    cfg = SynthConfig(n_units=500, true_tau=0.006, outcome_intercept=0.0, outcome_coefs={}, noise_sd=0.0, seed=2)
    res = generate(cfg)
    assert set(np.unique(res.data.y)) <= {0.0, 0.006}
    assert np.all(res.data.y[res.data.z == 1] == 0.006)


def test_generation_is_deterministic_and_chunk_independent(tmp_path):
    a = generate(preset_config("confounded-strong", n_units=3000, seed=5))
    b = generate(preset_config("confounded-strong", n_units=3000, seed=5))
    assert np.array_equal(a.data.X, b.data.X) and np.array_equal(a.data.y, b.data.y)
    write_synth(tmp_path / "a", a)
    write_synth(tmp_path / "b", b)
    for name in ("matrix.csv", "oracle.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_treated_share_matches_true_propensity():
    res = generate(preset_config("confounded-strong", n_units=20_000, seed=7))
    p = res.true_propensity
    se = math.sqrt(np.sum(p * (1 - p))) / len(p)
    assert abs(res.data.z.mean() - p.mean()) < 3 * se


def test_presets_stay_inside_bounds():
    for name in PRESETS:
        res = generate(preset_config(name, n_units=20_000, seed=3))
        assert res.true_propensity.min() >= 0.02 and res.true_propensity.max() <= 0.98


def test_degenerate_assignment():
    cfg = preset_config("confounded-strong", n_units=1000, seed=1)
    cfg = SynthConfig(**{**cfg.__dict__, "assignment_coefs": {"pitcher_inside_ratio": 5.0}})
    with pytest.raises(DegenerateAssignment):
        generate(cfg)


def test_randomized_naive_and_ipw_agree():
    res = generate(preset_config("randomized", n_units=20_000, seed=4))
    d = res.data
    ipw = ipw_ate(d.z, d.y, np.full(len(d), 0.5)).tau
    assert ipw == pytest.approx(naive_diff(d.z, d.y).inside_minus_outside, abs=1e-12)


def test_oracle_lookup(tmp_path):
    res = generate(preset_config("confounded-strong", n_units=500, true_tau=0.006, seed=1))
    assert oracle_ate(res.manifest) == 0.006
    write_synth(tmp_path, res)
    assert oracle_ate(tmp_path) == 0.006
    assert oracle_ate(tmp_path / "manifest.json") == 0.006
    zero = generate(preset_config("randomized", n_units=100, true_tau=0.0, seed=1))
    assert oracle_ate(zero.manifest) == 0.0
    with pytest.raises(MissingManifest):
        oracle_ate(tmp_path / "nope.json")
    with pytest.raises(MissingManifest):
        oracle_ate(None)


def test_heterogeneous_oracle_is_population_average():
    res = generate(preset_config("heterogeneous", n_units=10_000, seed=2))
    woba = res.data.column("batter_woba")
    brute = np.where(woba < 0.30, 0.010, np.where(woba < 0.34, 0.006, 0.002)).mean()
    assert oracle_ate(res.manifest) == pytest.approx(brute, abs=1e-15)
    assert np.array_equal(res.unit_tau, np.where(woba < 0.30, 0.010, np.where(woba < 0.34, 0.006, 0.002)))


def test_heterogeneity_validation():
    with pytest.raises(ValueError):
        Heterogeneity("batter_woba", (0.0, 0.3), (0.1, 0.2))


def test_woba_inside_ratio_correlation():
    res = generate(preset_config("confounded-strong", n_units=50_000, seed=1))
    r = np.corrcoef(res.data.column("batter_woba"), res.data.column("batter_inside_ratio"))[0, 1]
    assert 0.26 < r < 0.36
