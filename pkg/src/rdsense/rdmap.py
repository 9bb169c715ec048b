"""Clutter estimation and windowed Doppler FFT into a dB range-Doppler map.

Processing order per coherent frame: subtract the slow-time mean (zero-Doppler
clutter estimate) from every profile, apply a periodic Hann window along slow
time, then a slow-time DFT per range bin.

Conventions:
  * The slow-time transform uses the positive-exponent DFT with 1/P
    normalization, so a scatterer receding at +v (range increasing) lands at
    positive Doppler bins; after the FFT shift, row P/2 + v/velocity_bin.
  * Amplitudes are divided by the window's coherent gain (sum(w)/P = 0.5) so
    a unit-amplitude on-grid constant-velocity echo peaks at ~0 dB.
  * power_db = 20 log10(|.|), clamped at a -120 dB floor to keep values
    finite. The map stores linear power internally and converts lazily; the
    dB view is what every threshold in the pipeline is defined against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from sklearn.base import BaseEstimator, TransformerMixin

from .params import DerivedParams

DB_FLOOR = -120.0
_FLOOR_LINEAR = 10.0 ** (DB_FLOOR / 10.0)


def to_db(power: np.ndarray | float):
    """Linear power -> dB with the map's -120 dB floor clamp."""
    return 10.0 * np.log10(np.maximum(power, _FLOOR_LINEAR))


@dataclass
class RangeDopplerMap:
    power: np.ndarray             # linear power (doppler rows, range cols), shifted
    range_bin: float              # m per column
    velocity_bin: float           # m/s per row
    frame_index: int = 0
    frame_time: float = 0.0
    _power_db: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def power_db(self) -> np.ndarray:
        """Full dB map; computed on first access (it is only needed whole for
        dumps and display, the detector works on slices)."""
        if self._power_db is None:
            self._power_db = to_db(self.power)
        return self._power_db

    @property
    def n_doppler(self) -> int:
        return self.power.shape[0]

    @property
    def n_range(self) -> int:
        return self.power.shape[1]

    def velocity_of_row(self, row: int) -> float:
        return (row - self.n_doppler // 2) * self.velocity_bin

    def range_of_col(self, col: int) -> float:
        return col * self.range_bin


def estimate_clutter(profiles: np.ndarray) -> np.ndarray:
    """Zero-Doppler clutter estimate: mean across pulses per range bin."""
    profiles = np.asarray(profiles)
    if profiles.ndim != 2:
        raise ValueError("profiles must be a (pulses, range_bins) matrix")
    return profiles.mean(axis=0)


def periodic_hann(n: int) -> np.ndarray:
    """DFT-even Hann window, w[p] = 0.5 (1 - cos(2 pi p / n))."""
    p = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * p / n))


class RangeDopplerTransformer(TransformerMixin, BaseEstimator):
    """Turns a (P, N) stack of range profiles into a range-Doppler map.

    Dtype-preserving: complex64 profiles stay in single precision end to end.
    """

    def __init__(self, params: DerivedParams, cpi_pulses: int, workers: int = -1):
        self.params = params
        self.cpi_pulses = cpi_pulses
        self.workers = workers
        self._window = periodic_hann(cpi_pulses)
        self._coherent_gain = float(self._window.sum() / cpi_pulses)  # 0.5

    def fit(self, X=None, y=None):
        return self

    def transform(self, profiles: np.ndarray, frame_index: int = 0,
                  frame_time: float = 0.0, copy: bool = True) -> RangeDopplerMap:
        """``copy=False`` lets the transformer consume the profile stack in
        place (the pipeline hands over ownership of each frame)."""
        profiles = np.asarray(profiles)
        if profiles.ndim != 2 or profiles.shape[0] != self.cpi_pulses:
            raise ValueError(
                f"expected ({self.cpi_pulses}, N) profile stack, got {profiles.shape}"
            )
        # coherent-gain normalization folded into the window
        window = (self._window / self._coherent_gain).astype(profiles.real.dtype)
        clutter = estimate_clutter(profiles)
        if copy:
            resid = profiles - clutter
        else:
            resid = profiles
            resid -= clutter
        resid *= window[:, None]
        # ifft = positive-exponent DFT with the 1/P normalization we want
        spec = sfft.ifft(resid, axis=0, workers=self.workers, overwrite_x=True)
        raw = spec.real * spec.real + spec.imag * spec.imag
        half = self.cpi_pulses // 2
        power = np.empty_like(raw)
        power[:half] = raw[half:]
        power[half:] = raw[:half]
        return RangeDopplerMap(
            power=power,
            range_bin=self.params.range_bin,
            velocity_bin=self.params.velocity_bin,
            frame_index=frame_index,
            frame_time=frame_time,
        )
