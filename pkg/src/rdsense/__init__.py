"""Range-Doppler sensing pipeline twin.

Zadoff-Chu correlation ranging, clutter-filtered range-Doppler maps,
hysteresis detection, Kalman tracking, micro-Doppler activity classification,
a scripted point-scatterer echo simulator, and a live streaming gateway.
"""

from .params import ConfigError, DerivedParams, SystemConfig, derive
from .waveform import RangeCorrelator, range_profile, zadoff_chu
from .scene import (
    ScenarioError,
    ScenarioScript,
    ScattererState,
    Segment,
    load_scenario,
    save_scenario,
    scatterers_at,
    synthesize_cpi,
    synthesize_pulse,
)
from .rdmap import RangeDopplerMap, RangeDopplerTransformer, estimate_clutter, periodic_hann
from .tracking import (
    Detection,
    DetectionScope,
    HysteresisState,
    ScopeDetector,
    TargetTrack,
    hysteresis_step,
    kalman_predict,
    kalman_update,
    scope_max,
    track_lifecycle,
)
from .activity import ActivityFsm, ActivityState, MicroDopplerTrace, RoiSpec, drift, microdoppler_velocity
from .config import AppConfig, ProcessingConfig, load_config
from .pipeline import FrameEvent, SensingPipeline, bench, run_pipeline

__version__ = "0.1.0"
