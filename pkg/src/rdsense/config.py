"""Application configuration: numerology plus every processing default.

The config file is a JSON object with two optional sections, ``system`` and
``processing``; any field left out keeps its default. See README for the
full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

from .params import ConfigError, SystemConfig


@dataclass(frozen=True)
class ProcessingConfig:
    # detection scope and guard
    scope_min_m: float = 0.5
    scope_max_m: float = 30.0
    guard_bins: int = 1
    # hysteresis thresholds, dB above the calibrated noise floor (the floor
    # is the expected scope-maximum of noise, not the per-cell median)
    thr_up_db: float = 9.0
    thr_down_db: float = 5.0
    # Kalman tuning
    sigma_accel: float = 1.0          # m/s^2
    # measurement gate: detections whose innovation exceeds either bound are
    # coasted through instead of fed to the filter; after gate_relock_frames
    # consecutive rejections the next measurement is accepted unconditionally
    gate_range_m: float = 0.3
    gate_velocity_mps: float = 0.8
    gate_relock_frames: int = 5
    # micro-Doppler feature
    roi_halfwidth_bins: int = 8
    roi_threshold_db: float = -15.0
    roi_absolute: bool = False
    roi_min_snr_db: float = 12.0      # qualifying cells must also clear the
                                      # per-cell noise median by this margin
    vmd_window_s: float = 0.5
    # FSM
    drift_window_s: float = 0.5
    drift_threshold_m: float = 0.10
    wave_v_hi: float = 0.6
    wave_v_lo: float = 0.2

    def validate(self) -> None:
        if self.scope_min_m < 0 or self.scope_max_m <= self.scope_min_m:
            raise ConfigError("need 0 <= scope_min_m < scope_max_m")
        if self.guard_bins < 1:
            raise ConfigError("guard_bins must be >= 1")
        if self.thr_down_db >= self.thr_up_db:
            raise ConfigError("thr_down_db must be < thr_up_db")
        if self.wave_v_lo >= self.wave_v_hi:
            raise ConfigError("wave_v_lo must be < wave_v_hi")
        if self.roi_halfwidth_bins < 1:
            raise ConfigError("roi_halfwidth_bins must be >= 1")
        if self.gate_range_m <= 0 or self.gate_velocity_mps <= 0:
            raise ConfigError("measurement gates must be > 0")
        if self.gate_relock_frames < 1:
            raise ConfigError("gate_relock_frames must be >= 1")


@dataclass(frozen=True)
class AppConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    processing: ProcessingConfig = field(default_factory=ProcessingConfig)

    def validate(self) -> None:
        self.system.validate()
        self.processing.validate()


def _build(cls, data: dict, section: str):
    known = {f for f in cls.__dataclass_fields__}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown {section} config keys: {sorted(extra)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"bad {section} config: {e}") from e


def load_config(path: str | Path | None) -> AppConfig:
    if path is None:
        cfg = AppConfig()
        cfg.validate()
        return cfg
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    extra = set(data) - {"system", "processing"}
    if extra:
        raise ConfigError(f"{path}: unknown config sections: {sorted(extra)}")
    cfg = AppConfig(
        system=_build(SystemConfig, data.get("system", {}), "system"),
        processing=_build(ProcessingConfig, data.get("processing", {}), "processing"),
    )
    cfg.validate()
    return cfg


def with_overrides(cfg: AppConfig, **processing_overrides) -> AppConfig:
    """Apply CLI flag overrides to the processing section."""
    overrides = {k: v for k, v in processing_overrides.items() if v is not None}
    if not overrides:
        return cfg
    out = replace(cfg, processing=replace(cfg.processing, **overrides))
    out.validate()
    return out


def config_to_dict(cfg: AppConfig) -> dict:
    return asdict(cfg)
