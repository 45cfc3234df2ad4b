import math

import pytest

from ast_monitor.plan import Exercise, TrainingPlan
from ast_monitor.sensors import AntStreamDecoder, NmeaStreamDecoder
from ast_monitor.simulator import (RiderModel, RiderPolicy, Route,
                                   SimulationHarness, StreamEmitter,
                                   apply_feedback, default_route, step_hr)

# ---------------------------------------------------------------- plant


def test_rest_equilibrium_is_fixed_point():
    model = RiderModel(noise_sd=0.0)
    model.effort = 0.0
    before = model.hr
    for _ in range(50):
        step_hr(model, 1.0)
    assert model.hr == pytest.approx(before, abs=1e-9)


def test_full_effort_converges_to_max():
    model = RiderModel(noise_sd=0.0)
    model.effort = 1.0
    prev = model.hr
    for _ in range(int(5 * model.tau_s)):
        step_hr(model, 1.0)
        assert model.hr >= prev - 1e-12  # monotone rise, zero noise
        prev = model.hr
    assert model.hr == pytest.approx(model.hr_max, abs=1.0)


def test_trajectory_matches_exponential_oracle():
    """Forward-Euler plant stays within 0.5 bpm of the exact solution."""
    model = RiderModel(hr_rest=60, hr_max=195, tau_s=30.0, noise_sd=0.0)
    model.effort = model.effort_for(180.0)
    hr0, hr_ss = model.hr, model.hr_steady_state
    assert hr_ss == pytest.approx(180.0)
    for t in range(1, 301):
        step_hr(model, 1.0)
        exact = hr_ss + (hr0 - hr_ss) * math.exp(-t / 30.0)
        assert model.hr == pytest.approx(exact, abs=0.5)


def test_zero_noise_hr_stays_in_band():
    model = RiderModel(noise_sd=0.0)
    for effort in (0.0, 0.3, 1.0, 0.7, 0.0):
        model.effort = effort
        for _ in range(200):
            step_hr(model, 1.0)
            assert model.hr_rest - 1e-9 <= model.hr <= model.hr_max + 1e-9


def test_emitted_bpm_clamped_integer():
    model = RiderModel(hr_rest=60, hr_max=195, noise_sd=0.0)
    model.hr = 10.0
    assert model.bpm == 30
    model.hr = 500.0
    assert model.bpm == 230


def test_model_invariants_enforced():
    with pytest.raises(ValueError):
        RiderModel(hr_rest=200, hr_max=195)
    with pytest.raises(ValueError):
        RiderModel(tau_s=0)
    with pytest.raises(ValueError):
        step_hr(RiderModel(), 0)


# ---------------------------------------------------------------- policy


def test_policy_steps():
    model = RiderModel()
    model.effort = 0.5
    policy = RiderPolicy(gain=0.05)
    apply_feedback(policy, model, "-")
    assert model.effort == pytest.approx(0.55)
    apply_feedback(policy, model, "=")
    assert model.effort == pytest.approx(0.55)
    apply_feedback(policy, model, "+")
    assert model.effort == pytest.approx(0.5)


def test_policy_clamps():
    model = RiderModel()
    model.effort = 0.0
    RiderPolicy(gain=0.05).apply(model, "+")
    assert model.effort == 0.0
    model.effort = 1.0
    RiderPolicy(gain=0.05).apply(model, "-")
    assert model.effort == 1.0


def test_policy_alternation_returns_to_start():
    model = RiderModel()
    model.effort = 0.5
    policy = RiderPolicy(gain=0.05)
    for _ in range(10):
        policy.apply(model, "-")
        policy.apply(model, "+")
    assert model.effort == pytest.approx(0.5)


# ---------------------------------------------------------------- streams


def test_emitted_streams_parse_cleanly():
    model = RiderModel(noise_sd=0.0)
    model.effort = 0.6
    emitter = StreamEmitter(default_route())
    nmea_decoder = NmeaStreamDecoder()
    ant_decoder = AntStreamDecoder()
    for t in range(1, 121):
        step_hr(model, 1.0)
        nmea, ant = emitter.emit(model, t)
        fixes = list(nmea_decoder.feed(nmea, t * 1000))
        readings = list(ant_decoder.feed(ant, t * 1000))
        assert len(fixes) == 2  # GGA + RMC per tick
        assert nmea_decoder.dropped == 0
        assert [r.bpm for r in readings] == [model.bpm]
        gga = fixes[0]
        assert gga.altitude_m is not None
        assert fixes[1].speed_mps == pytest.approx(
            StreamEmitter.ground_speed(model.effort), abs=0.01)


def test_streams_reproducible_for_seed():
    def emit_bytes(seed):
        model = RiderModel(noise_sd=1.5, rng_seed=seed)
        model.effort = 0.5
        emitter = StreamEmitter(default_route())
        out = b""
        for t in range(1, 61):
            step_hr(model, 1.0)
            nmea, ant = emitter.emit(model, t)
            out += nmea + ant
        return out

    assert emit_bytes(42) == emit_bytes(42)
    assert emit_bytes(42) != emit_bytes(43)


def test_route_wraps_and_interpolates():
    route = Route([
        {"lat": 46.0, "lon": 15.0, "altitude_m": 300.0},
        {"lat": 46.001, "lon": 15.0, "altitude_m": 310.0},
    ])
    lat, lon, alt = route.point_at(0.0)
    assert (lat, alt) == (46.0, 300.0)
    lat, _, alt = route.point_at(route.loop_length / 4)
    assert 46.0 < lat < 46.001
    wrapped = route.point_at(route.loop_length + 1.0)
    assert wrapped == pytest.approx(route.point_at(1.0))


def test_route_load(tmp_path):
    path = tmp_path / "route.json"
    path.write_text('[{"lat": 1.0, "lon": 2.0, "altitude_m": 3.0},'
                    ' {"lat": 1.001, "lon": 2.0, "altitude_m": 4.0}]')
    route = Route.load(path)
    assert len(route.waypoints) == 2


# ---------------------------------------------------------------- closed loop


def test_closed_loop_default_rider(default_plan):
    model = RiderModel(noise_sd=0.0, rng_seed=42)
    result = SimulationHarness(default_plan, model).run()
    assert len(result.records) == 5
    assert all(r.completed for r in result.records)
    for record in result.records:
        assert abs(record.deviation_bpm) <= 8.0, record


def test_closed_loop_deterministic(default_plan):
    def run():
        model = RiderModel(noise_sd=1.5, rng_seed=42)
        result = SimulationHarness(default_plan, model).run()
        return [r.to_dict() for r in result.records], \
               [f.to_dict() for f in result.frames]

    assert run() == run()


def test_closed_loop_mean_settles_into_band():
    """With zero noise the gap |avg - target| is non-increasing once the
    mean has settled, for intervals at least 3 tau long."""
    plan = TrainingPlan(name="long", exercises=(
        Exercise(id=1, target_hr=150, duration_s=120),))
    model = RiderModel(noise_sd=0.0, rng_seed=42)
    result = SimulationHarness(plan, model).run()
    gaps = [abs(f.avg_hr - f.target_hr) for f in result.frames
            if f.phase == "interval_active" and f.avg_hr is not None]
    settle = int(3 * model.tau_s)
    tail = gaps[settle:]
    for earlier, later in zip(tail, tail[1:]):
        assert later <= earlier + 1e-9
