"""Micro-Doppler feature extraction and the four-state activity machine."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

import numpy as np

from .rdmap import RangeDopplerMap, to_db


class ActivityState(str, enum.Enum):
    ABSENT = "absent"
    STANDING = "standing"
    WALKING = "walking"
    WAVING = "waving"


@dataclass
class RoiSpec:
    """Region of interest around the tracked range for micro-Doppler extraction.

    The Doppler extent is the full axis minus the zero-Doppler guard. Cells
    within ``threshold_db`` of the ROI peak qualify; with ``absolute=True``
    the threshold is taken in absolute map dB instead.
    """

    range_halfwidth: int = 8
    threshold_db: float = -15.0
    absolute: bool = False

    def __post_init__(self):
        if self.range_halfwidth < 1:
            raise ValueError("range_halfwidth must be >= 1")
        if not self.absolute and self.threshold_db >= 0:
            raise ValueError("relative threshold_db must be < 0")


def microdoppler_velocity(rd: RangeDopplerMap, track_range: float, roi: RoiSpec,
                          zero_doppler_guard: int = 1,
                          min_db: float | None = None) -> float:
    """Maximum |velocity| whose return power clears the ROI threshold.

    Returns 0 when only cells hugging the guard band qualify (torso leakage,
    not genuine articulated motion). ``min_db`` adds an absolute lower bound
    on qualifying cells; without it a weak ROI peak lets the relative cut
    sink into the noise and random cells report spurious high velocities.
    """
    center_col = int(round(track_range / rd.range_bin))
    lo = max(0, center_col - roi.range_halfwidth)
    hi = min(rd.n_range, center_col + roi.range_halfwidth + 1)
    if lo >= hi:
        raise ValueError("ROI is empty after clipping to the map")
    center = rd.n_doppler // 2
    g = zero_doppler_guard
    rows = np.r_[0:center - g, center + g + 1:rd.n_doppler]
    sub = to_db(rd.power[np.ix_(rows, np.arange(lo, hi))])
    peak = sub.max()
    cut = peak + roi.threshold_db if not roi.absolute else roi.threshold_db
    if min_db is not None:
        cut = max(cut, min_db)
    qual_rows = rows[np.nonzero((sub > cut).any(axis=1))[0]]
    if qual_rows.size == 0:
        return 0.0
    offsets = np.abs(qual_rows - center)
    if offsets.max() <= g + 1:
        return 0.0
    return float(offsets.max() * rd.velocity_bin)


class MicroDopplerTrace:
    """Moving average of the per-frame micro-Doppler velocity.

    Keeps the samples of the last ``window`` seconds (5 frames at the default
    numerology) and exposes their arithmetic mean.
    """

    def __init__(self, window: float = 0.5):
        self.window = window
        self._buf: deque[tuple[float, float]] = deque()

    def push(self, t: float, v_abs_max: float) -> float:
        self._buf.append((t, v_abs_max))
        while self._buf and t - self._buf[0][0] >= self.window:
            self._buf.popleft()
        return self.smoothed

    def clear(self) -> None:
        self._buf.clear()

    @property
    def smoothed(self) -> float:
        if not self._buf:
            return 0.0
        return sum(v for _, v in self._buf) / len(self._buf)

    def __len__(self) -> int:
        return len(self._buf)


def drift(history: list[tuple[float, float]], window: float = 0.5) -> float:
    """Tracked-range drift over the trailing window.

    Compares the newest range against the nearest stored frame at or before
    t_now - window; 0 while the history is shorter than the window.
    """
    if len(history) < 2:
        return 0.0
    t_now, r_now = history[-1]
    cutoff = t_now - window
    r_then = None
    for t, r in history:
        if t <= cutoff:
            r_then = r
        else:
            break
    if r_then is None:
        return 0.0
    return abs(r_now - r_then)


class ActivityFsm:
    """Finite state machine over {absent, standing, walking, waving}.

    Absent unless detected; walking when the tracked position drifts more
    than ``drift_threshold`` within the drift window (checked before the
    waving decision); otherwise standing/waving by hysteresis on the smoothed
    micro-Doppler velocity.
    """

    def __init__(self, v_hi: float = 0.6, v_lo: float = 0.4,
                 drift_threshold: float = 0.10):
        if v_lo >= v_hi:
            raise ValueError("v_lo must be < v_hi")
        self.v_hi = v_hi
        self.v_lo = v_lo
        self.drift_threshold = drift_threshold
        self.state = ActivityState.ABSENT
        self._waving = False

    def step(self, detected: bool, drift_m: float, v_md: float) -> ActivityState:
        if not detected:
            self._waving = False
            self.state = ActivityState.ABSENT
        elif drift_m > self.drift_threshold:
            self._waving = False
            self.state = ActivityState.WALKING
        else:
            if v_md > self.v_hi:
                self._waving = True
            elif v_md < self.v_lo:
                self._waving = False
            self.state = ActivityState.WAVING if self._waving else ActivityState.STANDING
        return self.state
