"""Scope-restricted peak extraction, hysteresis detection, Kalman tracking."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator

from .params import DerivedParams
from .rdmap import RangeDopplerMap, to_db


@dataclass
class DetectionScope:
    """Rectangle of the map searched for the target peak.

    ``zero_doppler_guard`` rows on each side of zero Doppler (plus the zero
    row itself) are excluded so clutter residue cannot trigger detection.
    """

    min_range_bin: int
    max_range_bin: int
    zero_doppler_guard: int = 3

    def validate(self, n_range: int) -> None:
        if not (0 <= self.min_range_bin < self.max_range_bin <= n_range):
            raise ValueError(
                f"scope range bins [{self.min_range_bin}, {self.max_range_bin}) "
                f"invalid for {n_range} range bins"
            )
        if self.zero_doppler_guard < 1:
            raise ValueError("zero_doppler_guard must be >= 1")


@dataclass
class Detection:
    power_db: float
    range: float
    velocity: float
    range_bin: int
    doppler_bin: int


def scope_max(rd: RangeDopplerMap, scope: DetectionScope) -> Detection:
    """Maximum-power cell within the scope, guard rows excluded.

    Ties break to the lowest range bin, then the lowest Doppler bin.
    """
    scope.validate(rd.n_range)
    center = rd.n_doppler // 2
    g = scope.zero_doppler_guard
    rows = np.concatenate([
        np.arange(0, center - g),
        np.arange(center + g + 1, rd.n_doppler),
    ])
    if rows.size == 0:
        raise ValueError("guard excludes every Doppler row")
    sub = rd.power[np.ix_(rows, np.arange(scope.min_range_bin, scope.max_range_bin))]
    best = sub.max()
    # tie-break: lowest range bin first, then lowest Doppler bin
    hits = np.argwhere(sub == best)
    order = np.lexsort((hits[:, 0], hits[:, 1]))
    d_i, r_i = hits[order[0]]
    doppler_bin = int(rows[d_i])
    range_bin = int(scope.min_range_bin + r_i)
    return Detection(
        power_db=float(to_db(best)),
        range=rd.range_of_col(range_bin),
        velocity=rd.velocity_of_row(doppler_bin),
        range_bin=range_bin,
        doppler_bin=doppler_bin,
    )


class ScopeDetector(BaseEstimator):
    """Peak extractor with a noise floor calibrated from target-free frames.

    ``fit`` measures the floor as the median scope power of the warm-up maps;
    the fixed hysteresis thresholds are offsets above that floor and do not
    move afterwards.
    """

    def __init__(self, scope: DetectionScope, upper_offset_db: float = 9.0,
                 lower_offset_db: float = 5.0):
        self.scope = scope
        self.upper_offset_db = upper_offset_db
        self.lower_offset_db = lower_offset_db

    def fit(self, maps: list[RangeDopplerMap], y=None):
        if self.lower_offset_db >= self.upper_offset_db:
            raise ValueError("lower_offset_db must be < upper_offset_db")
        if not maps:
            raise ValueError("need at least one warm-up map")
        samples = []
        for rd in maps:
            center = rd.n_doppler // 2
            g = self.scope.zero_doppler_guard
            rows = np.r_[0:center - g, center + g + 1:rd.n_doppler]
            samples.append(
                rd.power[np.ix_(rows, np.arange(self.scope.min_range_bin,
                                                self.scope.max_range_bin))].ravel()
            )
        cells = np.concatenate(samples)
        self.cell_median_db_ = float(to_db(np.median(cells)))
        # the detector statistic is a max over the scope, so the reference
        # floor is the expected maximum of M exponential noise cells:
        # median + 10 log10(ln M / ln 2)
        m = cells.size
        self.noise_floor_db_ = self.cell_median_db_ + float(
            10.0 * np.log10(np.log(m) / np.log(2.0)))
        self.upper_db_ = self.noise_floor_db_ + self.upper_offset_db
        self.lower_db_ = self.noise_floor_db_ + self.lower_offset_db
        return self

    def predict(self, rd: RangeDopplerMap) -> Detection:
        return scope_max(rd, self.scope)


@dataclass
class HysteresisState:
    """Two-threshold detector state; strict inequalities at both thresholds."""

    upper_db: float
    lower_db: float
    active: bool = False

    def __post_init__(self):
        if self.lower_db >= self.upper_db:
            raise ValueError("lower_db must be < upper_db")


def hysteresis_step(state: HysteresisState, power_db: float) -> HysteresisState:
    if state.active:
        active = not (power_db < state.lower_db)
    else:
        active = power_db > state.upper_db
    return replace(state, active=active)


@dataclass
class TargetTrack:
    """Constant-velocity Kalman state over (range, radial velocity)."""

    state: np.ndarray                 # shape (2,): [range m, velocity m/s]
    covariance: np.ndarray            # 2x2 SPD
    last_update_frame: int = 0
    history: list = field(default_factory=list)  # (frame_time, range) pairs
    gated_misses: int = 0             # consecutive measurements rejected by the gate


def process_noise(dt: float, sigma_accel: float) -> np.ndarray:
    """Discrete white-noise-acceleration covariance."""
    q = sigma_accel ** 2
    return q * np.array([
        [dt ** 4 / 4.0, dt ** 3 / 2.0],
        [dt ** 3 / 2.0, dt ** 2],
    ])


def kalman_predict(track: TargetTrack, dt: float, sigma_accel: float = 1.0) -> TargetTrack:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    F = np.array([[1.0, dt], [0.0, 1.0]])
    x = F @ track.state
    P = F @ track.covariance @ F.T + process_noise(dt, sigma_accel)
    return TargetTrack(x, P, track.last_update_frame, track.history, track.gated_misses)


def kalman_update(track: TargetTrack, z: np.ndarray, R: np.ndarray) -> TargetTrack:
    """Measurement update with H = I (range and velocity both measured).

    Joseph-form covariance update keeps P symmetric positive-definite.
    """
    z = np.asarray(z, dtype=float)
    R = np.asarray(R, dtype=float)
    if np.any(np.linalg.eigvalsh(R) <= 0) or np.any(np.linalg.eigvalsh(track.covariance) <= 0):
        raise ValueError("covariances must be positive-definite")
    P = track.covariance
    S = P + R
    K = P @ np.linalg.inv(S)
    x = track.state + K @ (z - track.state)
    A = np.eye(2) - K
    P_new = A @ P @ A.T + K @ R @ K.T
    P_new = 0.5 * (P_new + P_new.T)
    return TargetTrack(x, P_new, track.last_update_frame, track.history, track.gated_misses)


def default_measurement_noise(params: DerivedParams) -> np.ndarray:
    """Bin quantization sets the natural measurement noise scale."""
    return np.diag([params.range_bin ** 2, params.velocity_bin ** 2])


def track_lifecycle(
    track: TargetTrack | None,
    active: bool,
    det: Detection,
    dt: float,
    params: DerivedParams,
    sigma_accel: float = 1.0,
    R: np.ndarray | None = None,
    frame_index: int = 0,
    frame_time: float = 0.0,
    history_span: float = 2.0,
    gate_range: float = 0.3,
    gate_velocity: float = 0.8,
    gate_relock: int = 5,
) -> TargetTrack | None:
    """Advance the single-target track one frame.

    No track + active detector -> initialize at the measurement; active ->
    predict, then update if the measurement falls inside the innovation gate
    (coast otherwise); inactive -> drop the track. A secondary scatterer or
    noise cell that wins the argmax momentarily would otherwise yank the
    track, so detections whose range or velocity innovation exceeds the gate
    are skipped. After ``gate_relock`` consecutive rejections the next
    measurement is accepted unconditionally to recover from a stale track.
    """
    if not active:
        return None
    if R is None:
        R = default_measurement_noise(params)
    z = np.array([det.range, det.velocity])
    if track is None:
        P0 = np.diag([(10.0 * params.range_bin) ** 2, (10.0 * params.velocity_bin) ** 2])
        track = TargetTrack(z.copy(), P0, frame_index, [])
    else:
        track = kalman_predict(track, dt, sigma_accel)
        inn = z - track.state
        gated = abs(inn[0]) > gate_range or abs(inn[1]) > gate_velocity
        if gated and track.gated_misses < gate_relock:
            track.gated_misses += 1
        else:
            track = kalman_update(track, z, R)
            track.last_update_frame = frame_index
            track.gated_misses = 0
    track.history.append((frame_time, float(track.state[0])))
    while track.history and frame_time - track.history[0][0] > history_span:
        track.history.pop(0)
    return track
