"""System numerology and the physical parameters derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Invalid system or scenario configuration."""


@dataclass(frozen=True)
class SystemConfig:
    """Waveform and acquisition numerology.

    Defaults model a 160 GHz sensing link sampled at 4 GS/s probing with
    8192-sample Zadoff-Chu sequences, one correlated sequence every 100
    sequence periods, 512 pulses per coherent frame.
    """

    carrier_frequency: float = 160e9      # Hz
    sample_rate: float = 4e9              # Hz
    sequence_length: int = 8192           # samples per probing sequence
    zc_root: int = 1                      # Zadoff-Chu root, coprime with length
    pri_sequences: int = 100              # sequence periods per PRI
    cpi_pulses: int = 512                 # pulses per coherent frame (FFT length)
    speed_of_light: float = SPEED_OF_LIGHT

    def validate(self) -> None:
        if self.sequence_length < 2:
            raise ConfigError("sequence_length must be >= 2")
        if self.zc_root < 1:
            raise ConfigError("zc_root must be a positive integer")
        if math.gcd(self.zc_root, self.sequence_length) != 1:
            raise ConfigError(
                f"zc_root={self.zc_root} is not coprime with "
                f"sequence_length={self.sequence_length}"
            )
        if self.pri_sequences < 1:
            raise ConfigError("pri_sequences must be >= 1")
        p = self.cpi_pulses
        if p < 1 or (p & (p - 1)) != 0:
            raise ConfigError(f"cpi_pulses={p} must be a power of two")
        for name in ("carrier_frequency", "sample_rate", "speed_of_light"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class DerivedParams:
    """Closed-form physical parameters implied by a :class:`SystemConfig`."""

    wavelength: float                 # m
    range_bin: float                  # m, c / (2 fs)
    sequence_duration: float          # s
    pri: float                        # s
    cpi: float                        # s
    velocity_bin: float               # m/s, lambda / (2 cpi)
    max_unambiguous_velocity: float   # m/s, lambda / (4 pri)
    max_unambiguous_range: float      # m
    frame_rate: float                 # Hz, 1 / cpi

    def as_dict(self) -> dict[str, float]:
        return {
            "wavelength": self.wavelength,
            "range_bin": self.range_bin,
            "sequence_duration": self.sequence_duration,
            "pri": self.pri,
            "cpi": self.cpi,
            "velocity_bin": self.velocity_bin,
            "max_unambiguous_velocity": self.max_unambiguous_velocity,
            "max_unambiguous_range": self.max_unambiguous_range,
            "frame_rate": self.frame_rate,
        }


def derive(config: SystemConfig) -> DerivedParams:
    """Derive all physical pipeline parameters from the numerology.

    Pure and deterministic; raises :class:`ConfigError` if the config
    invariants do not hold.
    """
    config.validate()
    c = config.speed_of_light
    wavelength = c / config.carrier_frequency
    range_bin = c / (2.0 * config.sample_rate)
    sequence_duration = config.sequence_length / config.sample_rate
    pri = config.pri_sequences * sequence_duration
    cpi = config.cpi_pulses * pri
    return DerivedParams(
        wavelength=wavelength,
        range_bin=range_bin,
        sequence_duration=sequence_duration,
        pri=pri,
        cpi=cpi,
        velocity_bin=wavelength / (2.0 * cpi),
        max_unambiguous_velocity=wavelength / (4.0 * pri),
        max_unambiguous_range=config.sequence_length * range_bin,
        frame_rate=1.0 / cpi,
    )
