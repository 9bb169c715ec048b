import numpy as np
import pytest

from rdsense.rdmap import RangeDopplerMap
from rdsense.tracking import (
    DetectionScope,
    HysteresisState,
    ScopeDetector,
    TargetTrack,
    default_measurement_noise,
    hysteresis_step,
    kalman_predict,
    kalman_update,
    process_noise,
    scope_max,
    track_lifecycle,
)


def make_map(power, range_bin=0.0375, velocity_bin=0.009):
    return RangeDopplerMap(np.asarray(power, dtype=float), range_bin, velocity_bin)


def noise_map(rng, rows=64, cols=48, mean_power=1e-4):
    # complex white Gaussian noise -> exponential power cells
    return make_map(rng.exponential(mean_power, size=(rows, cols)))


class TestScope:
    def test_validate(self):
        DetectionScope(1, 10).validate(16)
        with pytest.raises(ValueError):
            DetectionScope(5, 5).validate(16)
        with pytest.raises(ValueError):
            DetectionScope(0, 32).validate(16)
        with pytest.raises(ValueError):
            DetectionScope(0, 8, zero_doppler_guard=0).validate(16)

    def test_peak_found(self):
        p = np.full((64, 48), 1e-8)
        p[40, 20] = 1.0
        det = scope_max(make_map(p), DetectionScope(0, 48, 1))
        assert (det.doppler_bin, det.range_bin) == (40, 20)
        assert det.power_db == pytest.approx(0.0)
        assert det.range == pytest.approx(20 * 0.0375)
        assert det.velocity == pytest.approx((40 - 32) * 0.009)

    def test_guard_rows_excluded(self):
        p = np.full((64, 48), 1e-8)
        p[32, 10] = 1.0   # zero Doppler: inside any guard
        p[33, 11] = 0.5   # +1 row: inside guard 1
        p[35, 12] = 0.25  # +3 rows: inside guard 3 only
        det = scope_max(make_map(p), DetectionScope(0, 48, 1))
        assert (det.doppler_bin, det.range_bin) == (35, 12)
        det = scope_max(make_map(p), DetectionScope(0, 48, 3))
        assert det.power_db < -10  # all planted peaks guarded out

    def test_range_columns_restricted(self):
        p = np.full((64, 48), 1e-8)
        p[5, 2] = 1.0
        det = scope_max(make_map(p), DetectionScope(10, 48, 1))
        assert det.range_bin >= 10

    def test_tie_break_lowest_range_then_doppler(self):
        p = np.full((64, 48), 1e-8)
        p[50, 30] = p[10, 30] = p[10, 25] = 1.0
        det = scope_max(make_map(p), DetectionScope(0, 48, 1))
        assert (det.range_bin, det.doppler_bin) == (25, 10)


class TestDetectorCalibration:
    def test_floor_matches_measured_scope_max(self, rng):
        maps = [noise_map(rng) for _ in range(4)]
        scope = DetectionScope(0, 48, 1)
        det = ScopeDetector(scope).fit(maps)
        measured = max(scope_max(m, scope).power_db for m in maps)
        # expected-max floor should sit within ~1.5 dB of the realized maxima
        assert det.noise_floor_db_ == pytest.approx(measured, abs=1.5)
        assert det.upper_db_ == det.noise_floor_db_ + det.upper_offset_db
        assert det.lower_db_ == det.noise_floor_db_ + det.lower_offset_db
        assert det.cell_median_db_ < det.noise_floor_db_

    def test_fit_requires_maps_and_sane_offsets(self, rng):
        scope = DetectionScope(0, 48, 1)
        with pytest.raises(ValueError):
            ScopeDetector(scope).fit([])
        with pytest.raises(ValueError):
            ScopeDetector(scope, upper_offset_db=5, lower_offset_db=9).fit([noise_map(rng)])

    def test_predict_is_scope_max(self, rng):
        m = noise_map(rng)
        scope = DetectionScope(0, 48, 1)
        det = ScopeDetector(scope).fit([m])
        assert det.predict(m) == scope_max(m, scope)


class TestHysteresis:
    def test_trace(self):
        s = HysteresisState(upper_db=-20.0, lower_db=-25.0)
        seq = [(-30, False), (-19, True), (-22, True), (-24.9, True),
               (-25.1, False), (-21, False), (-18, True)]
        for p, want in seq:
            s = hysteresis_step(s, p)
            assert s.active is want

    def test_strict_inequalities(self):
        s = HysteresisState(upper_db=-20.0, lower_db=-25.0)
        assert hysteresis_step(s, -20.0).active is False   # equality does not arm
        armed = HysteresisState(-20.0, -25.0, active=True)
        assert hysteresis_step(armed, -25.0).active is True  # equality does not release

    def test_invalid_thresholds(self):
        with pytest.raises(ValueError):
            HysteresisState(upper_db=-25.0, lower_db=-20.0)


class TestKalman:
    def test_process_noise_formula(self):
        Q = process_noise(0.1, 2.0)
        np.testing.assert_allclose(Q, 4.0 * np.array([[0.1 ** 4 / 4, 0.1 ** 3 / 2],
                                                      [0.1 ** 3 / 2, 0.1 ** 2]]))

    def test_predict_hand_example(self):
        tr = TargetTrack(np.array([5.0, 0.5]), np.eye(2))
        out = kalman_predict(tr, dt=2.0, sigma_accel=0.0)
        np.testing.assert_allclose(out.state, [6.0, 0.5])
        # F P F^T with P = I: [[1+dt^2, dt], [dt, 1]]
        np.testing.assert_allclose(out.covariance, [[5.0, 2.0], [2.0, 1.0]])

    def test_update_hand_example(self):
        # P = R = I  =>  K = I/2, x_new halfway to the measurement, P_new = I/2
        tr = TargetTrack(np.array([0.0, 0.0]), np.eye(2))
        out = kalman_update(tr, np.array([2.0, 4.0]), np.eye(2))
        np.testing.assert_allclose(out.state, [1.0, 2.0])
        np.testing.assert_allclose(out.covariance, np.eye(2) / 2.0, atol=1e-12)

    def test_invalid_covariances_rejected(self):
        tr = TargetTrack(np.zeros(2), np.eye(2))
        with pytest.raises(ValueError):
            kalman_update(tr, np.zeros(2), np.diag([1.0, -1.0]))
        bad = TargetTrack(np.zeros(2), np.diag([1.0, 0.0]))
        with pytest.raises(ValueError):
            kalman_update(bad, np.zeros(2), np.eye(2))

    def test_covariance_stays_spd_over_long_run(self, rng):
        tr = TargetTrack(np.zeros(2), np.diag([0.375, 0.09]))
        R = np.diag([0.0375 ** 2, 0.009 ** 2])
        for _ in range(10_000):
            tr = kalman_predict(tr, 0.105, 1.0)
            tr = kalman_update(tr, rng.standard_normal(2) * 0.05, R)
            eig = np.linalg.eigvalsh(tr.covariance)
            assert eig.min() > 0
            np.testing.assert_allclose(tr.covariance, tr.covariance.T, atol=1e-15)

    def test_convergence_on_constant_velocity(self, rng, params):
        R = default_measurement_noise(params)
        dt = params.cpi
        truth_v = 0.5
        tr = None
        det_cls = type("D", (), {})
        for f in range(40):
            t = f * dt
            d = det_cls()
            d.range = 5.0 + truth_v * t + rng.standard_normal() * params.range_bin / 3
            d.velocity = truth_v + rng.standard_normal() * params.velocity_bin / 3
            tr = track_lifecycle(tr, True, d, dt, params, frame_index=f, frame_time=t)
        assert abs(tr.state[0] - (5.0 + truth_v * 39 * dt)) < params.range_bin
        assert abs(tr.state[1] - truth_v) < params.velocity_bin


class TestLifecycle:
    def fake_det(self, r, v):
        d = type("D", (), {})()
        d.range, d.velocity = r, v
        return d

    def test_init_drop_and_history(self, params):
        dt = params.cpi
        tr = track_lifecycle(None, True, self.fake_det(5.0, 0.1), dt, params,
                             frame_index=0, frame_time=0.0)
        np.testing.assert_allclose(tr.state, [5.0, 0.1])
        assert tr.history == [(0.0, 5.0)]
        assert track_lifecycle(tr, False, self.fake_det(5.0, 0.1), dt, params) is None

    def test_history_trimmed_to_span(self, params):
        dt = params.cpi
        tr = None
        for f in range(40):
            tr = track_lifecycle(tr, True, self.fake_det(5.0, 0.0), dt, params,
                                 frame_index=f, frame_time=f * dt, history_span=1.0)
        times = [t for t, _ in tr.history]
        assert times[-1] - times[0] <= 1.0 + 1e-9

    def test_gating_rejects_velocity_jump(self, params):
        dt = params.cpi
        tr = track_lifecycle(None, True, self.fake_det(5.0, 0.0), dt, params,
                             frame_index=0, frame_time=0.0)
        # a limb-like outlier at +1.2 m/s must not drag the track
        tr2 = track_lifecycle(tr, True, self.fake_det(5.1, 1.2), dt, params,
                              frame_index=1, frame_time=dt)
        assert abs(tr2.state[1]) < 0.05
        assert tr2.gated_misses == 1
        assert tr2.last_update_frame == 0

    def test_gating_relocks_after_persistent_misses(self, params):
        dt = params.cpi
        tr = track_lifecycle(None, True, self.fake_det(5.0, 0.0), dt, params,
                             frame_index=0, frame_time=0.0)
        for f in range(1, 8):
            tr = track_lifecycle(tr, True, self.fake_det(9.0, 0.0), dt, params,
                                 frame_index=f, frame_time=f * dt,
                                 gate_relock=3)
        # after 3 consecutive rejections the filter accepts the new position
        assert abs(tr.state[0] - 9.0) < 0.5

    def test_within_gate_updates_normally(self, params):
        dt = params.cpi
        tr = track_lifecycle(None, True, self.fake_det(5.0, 0.0), dt, params,
                             frame_index=0, frame_time=0.0)
        tr = track_lifecycle(tr, True, self.fake_det(5.02, 0.01), dt, params,
                             frame_index=1, frame_time=dt)
        assert tr.gated_misses == 0
        assert tr.last_update_frame == 1

    def test_default_measurement_noise(self, params):
        R = default_measurement_noise(params)
        np.testing.assert_allclose(R, np.diag([params.range_bin ** 2,
                                               params.velocity_bin ** 2]))
