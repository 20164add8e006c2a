import io
import math
from datetime import datetime, timedelta

import pytest

from edflow.records import EventStore, write_records_csv
from edflow.simulator import SimProfile, default_profile, generate, shifted
from edflow.timeseries import build_frame

START = datetime(2015, 1, 1)


# --- profile ------------------------------------------------------------

def test_default_profile_mixture_sums_to_one():
    p = default_profile()
    assert abs(sum(p.acuity_mix) - 1.0) <= 1e-12
    assert p.acuity_mix == (0.2394, 0.5842, 0.1764)


def test_default_profile_multipliers_are_normalized():
    p = default_profile()
    assert sum(p.hour_mult) / 24 == pytest.approx(1.0, abs=1e-12)
    assert sum(p.dow_mult) / 7 == pytest.approx(1.0, abs=1e-12)
    assert sum(p.month_mult) / 12 == pytest.approx(1.0, abs=1e-12)


def test_default_profile_shape_properties():
    p = default_profile()
    assert p.hour_mult[3] < p.hour_mult[14]  # overnight trough below afternoon
    assert max(p.hour_mult) / min(p.hour_mult) == pytest.approx(3.0, rel=1e-9)
    assert p.dow_mult[0] == max(p.dow_mult)  # Monday peak
    assert all(0.89 < m < 1.11 for m in p.month_mult)


def test_default_profile_annual_volume_target():
    # mean intensity ~ base_rate because the multipliers are mean-1
    p = default_profile()
    assert p.base_rate * 24 * 365.25 == pytest.approx(60_000, rel=0.01)


def test_profile_validation():
    p = default_profile()
    with pytest.raises(ValueError):
        SimProfile(
            base_rate=p.base_rate,
            hour_mult=p.hour_mult,
            dow_mult=p.dow_mult,
            month_mult=p.month_mult,
            acuity_mix=(0.5, 0.4, 0.2),
            los_median_hours=p.los_median_hours,
            los_sigma=p.los_sigma,
        )


def test_profile_json_round_trip(tmp_path):
    p = default_profile(seed=9)
    path = tmp_path / "profile.json"
    path.write_text(p.to_json())
    assert SimProfile.load(path) == p


# --- generation ----------------------------------------------------------

def test_identical_seed_is_byte_identical(tmp_path):
    p = default_profile(seed=123)
    recs_a = generate(p, START, START + timedelta(days=14))
    recs_b = generate(p, START, START + timedelta(days=14))
    buf_a, buf_b = io.StringIO(), io.StringIO()
    EventStore().ingest(recs_a)
    assert recs_a == recs_b
    a_path, b_path = tmp_path / "a.csv", tmp_path / "b.csv"
    write_records_csv(recs_a, a_path)
    write_records_csv(recs_b, b_path)
    assert a_path.read_bytes() == b_path.read_bytes()


def test_different_seeds_differ():
    assert generate(default_profile(1), START, START + timedelta(days=3)) != generate(
        default_profile(2), START, START + timedelta(days=3)
    )


def test_span_shorter_than_one_hour_rejected():
    with pytest.raises(ValueError):
        generate(default_profile(), START, START + timedelta(minutes=30))


def test_records_are_valid_and_ordered(sim_records):
    arrivals = [r.arrival_time for r in sim_records]
    assert arrivals == sorted(arrivals)
    assert all(r.departure_time > r.arrival_time for r in sim_records)
    assert all(r.esi in (1, 2, 3, 4, 5) for r in sim_records)
    assert all(r.arrival_time.second == 0 for r in sim_records)


def test_volume_matches_intensity(sim_records):
    # 90 days at ~60k/year with mean-1 multipliers (Jan-Mar months run ~1.8% hot)
    expected = 6.85 * 24 * 90
    assert len(sim_records) == pytest.approx(expected, rel=0.05)


def test_acuity_mix_on_shared_fixture(sim_records):
    counts = {"emergent": 0, "urgent": 0, "nonurgent": 0}
    for r in sim_records:
        counts[r.group.value] += 1
    n = len(sim_records)
    assert counts["emergent"] / n == pytest.approx(0.2394, abs=0.02)
    assert counts["urgent"] / n == pytest.approx(0.5842, abs=0.02)
    assert counts["nonurgent"] / n == pytest.approx(0.1764, abs=0.02)


def test_hourly_rate_converges_to_intensity():
    p = default_profile(seed=31)
    days = 240
    recs = generate(p, START, START + timedelta(days=days))
    for hour in (3, 14, 20):
        observed = sum(1 for r in recs if r.arrival_time.hour == hour)
        # expectation over the span, holding hour fixed and averaging dow/month
        lam = p.base_rate * p.hour_mult[hour]
        expected = lam * days
        stderr = math.sqrt(expected)
        assert abs(observed - expected) < max(4 * stderr, 0.06 * expected)


def test_census_bounded_by_rate_times_max_stay(sim_store):
    frame = build_frame(sim_store.snapshot(), datetime(2014, 1, 1), datetime(2014, 4, 1))
    assert (frame.census >= 0).all()
    p = default_profile()
    bound = p.peak_rate * 24.0  # stays held open are capped at 24h
    assert frame.census.max() < bound


def test_shifted_profile_scales_rate():
    p = default_profile(seed=5)
    hot = shifted(p, 1.5)
    assert hot.base_rate == pytest.approx(p.base_rate * 1.5)
    assert hot.seed == p.seed
    recs = generate(shifted(p, 1.5, seed=77), START, START + timedelta(days=30))
    base = generate(default_profile(seed=77), START, START + timedelta(days=30))
    assert len(recs) == pytest.approx(1.5 * len(base), rel=0.1)
