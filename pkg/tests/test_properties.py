"""Property-based checks of invariants that hold for any input."""

import warnings

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pitchipw.codes import EventCode
from pitchipw.diagnostics import asam
from pitchipw.estimate import ipw_ate
from pitchipw.features import rolling_inside_ratio
from pitchipw.ingest import CANVAS_PX, DemandZone, classify_demand_zone, classify_zones
from pitchipw.propensity import clip_propensity
from pitchipw.valuation import build_event_value_table

xs = st.floats(0, CANVAS_PX[0], allow_nan=False)
ys = st.floats(0, CANVAS_PX[1], allow_nan=False)
hands = st.sampled_from(["L", "R"])


@given(xs, ys, hands)
def test_zone_mirror_symmetry(x, y, hand):
    other = "L" if hand == "R" else "R"
    assert classify_demand_zone(x, y, hand) == classify_demand_zone(CANVAS_PX[0] - x, y, other)


@given(xs, ys, hands)
def test_zone_total_and_consistent(x, y, hand):
    z = classify_demand_zone(x, y, hand)
    assert z in set(DemandZone)
    assert classify_zones([x], [y], [hand])[0] == z.value


@st.composite
def ipw_problem(draw, min_n=2, max_n=40):
    n = draw(st.integers(min_n, max_n))
    z = draw(hnp.arrays(np.int64, n, elements=st.integers(0, 1)))
    z[0], z[1] = 1, 0
    y = draw(hnp.arrays(np.float64, n, elements=st.floats(-5, 5)))
    p = draw(hnp.arrays(np.float64, n, elements=st.floats(0.02, 0.98)))
    return z, y, p


@given(ipw_problem(), st.randoms(use_true_random=False))
def test_ipw_permutation_invariant(prob, rnd):
    z, y, p = prob
    perm = list(range(len(z)))
    rnd.shuffle(perm)
    a, b = ipw_ate(z, y, p).tau, ipw_ate(z[perm], y[perm], p[perm]).tau
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@given(ipw_problem())
def test_ipw_duplication_invariant(prob):
    z, y, p = prob
    a = ipw_ate(z, y, p).tau
    b = ipw_ate(np.r_[z, z], np.r_[y, y], np.r_[p, p]).tau
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@given(ipw_problem(), st.floats(-10, 10))
def test_ipw_outcome_shift_invariant(prob, c):
    z, y, p = prob
    a = ipw_ate(z, y, p)
    b = ipw_ate(z, y + c, p)
    assert abs(a.tau - b.tau) <= 1e-9 * max(1.0, abs(a.tau), abs(c))
    assert abs((b.ey1 - a.ey1) - c) <= 1e-9 * max(1.0, abs(c))


@given(ipw_problem())
def test_ipw_between_group_means(prob):
    z, y, p = prob
    est = ipw_ate(z, y, p)
    assert y[z == 1].min() - 1e-9 <= est.ey1 <= y[z == 1].max() + 1e-9
    assert y[z == 0].min() - 1e-9 <= est.ey0 <= y[z == 0].max() + 1e-9


group = hnp.arrays(np.float64, st.integers(2, 30), elements=st.floats(-100, 100))


@given(group, group, st.floats(0.01, 100), st.floats(-50, 50))
def test_asam_affine_invariant_and_symmetric(a, b, scale, shift):
    pooled = (len(a) * a.var() + len(b) * b.var()) / (len(a) + len(b))
    if pooled < 1e-6:
        return
    base = asam(a, b)
    assert abs(asam(a * scale + shift, b * scale + shift) - base) <= 1e-6 * max(1.0, base)
    assert abs(asam(b, a) - base) <= 1e-12 * max(1.0, base)
    assert base >= 0


codes = st.sampled_from(list(EventCode))


@settings(max_examples=50)
@given(st.lists(st.tuples(codes, st.floats(-2, 2)), min_size=1, max_size=40), st.randoms(use_true_random=False))
def test_event_table_order_invariant(occ, rnd):
    shuffled = list(occ)
    rnd.shuffle(shuffled)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a, b = build_event_value_table(occ), build_event_value_table(shuffled)
    assert a.sample_n == b.sample_n
    assert a.value.keys() == b.value.keys()
    for k in a.value:
        assert abs(a.value[k] - b.value[k]) <= 1e-12


@given(st.lists(st.sampled_from([z.value for z in DemandZone]), min_size=1, max_size=50))
def test_inside_ratio_in_unit_interval(zones):
    if not any(z != DemandZone.EXCLUDED.value for z in zones):
        return
    r = rolling_inside_ratio(zones)
    assert 0.0 <= r <= 1.0
    assert rolling_inside_ratio(zones + [DemandZone.EXCLUDED.value]) == r


@given(st.floats(0, 1), st.floats(1e-6, 0.49))
def test_clip_bounds(p, eps):
    c = clip_propensity(p, eps)
    assert eps <= c <= 1 - eps
    if eps <= p <= 1 - eps:
        assert c == p
