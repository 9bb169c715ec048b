"""Scripted point-scatterer scene and baseband echo synthesis.

The simulated channel replaces the physical link: each pulse is the sum of
fractionally delayed copies of the probing sequence, one per scatterer, with
an explicit carrier phase term exp(-j 4 pi r / lambda) that is the sole
source of pulse-to-pulse Doppler (stop-and-hop).

Noise bookkeeping: ``snr_db`` is the post-correlation peak SNR of a
unit-amplitude scatterer. With the correlation scaling of
:mod:`rdsense.waveform`, per-bin noise power after correlation is
sigma^2 / N for per-sample noise power sigma^2, so we draw complex white
Gaussian noise with sigma^2 = N * 10^(-snr_db/10). Per-sample SNR is then
snr_db - 10 log10(N) (the correlation processing gain).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .params import DerivedParams

ACTIVITIES = ("absent", "standing", "walking", "waving")

# standing-human residual torso sway
SWAY_AMPLITUDE_M = 0.005
SWAY_FREQUENCY_HZ = 0.3
# limb echo strength relative to the torso
LIMB_AMPLITUDE_RATIO = 0.25
TORSO_AMPLITUDE = 1.0


class ScenarioError(ValueError):
    """Malformed or physically invalid scenario script."""


@dataclass
class Segment:
    start_time: float
    activity: str
    start_range: float = 5.0
    walk_speed: float = 0.0
    wave_amplitude: float = 0.15
    # 1.3 Hz keeps the limb velocity nulls from lining up with the 0.3 Hz
    # torso sway nulls (a harmonic rate would make both vanish at once and
    # drop the echo into the noise every few seconds)
    wave_frequency: float = 1.3


@dataclass
class ClutterPoint:
    range: float
    amplitude: float


@dataclass
class ScattererState:
    range: float
    radial_velocity: float
    amplitude: float


@dataclass
class ScenarioScript:
    segments: list[Segment]
    duration: float = 10.0
    snr_db: float = 20.0
    clutter: list[ClutterPoint] = field(default_factory=list)
    seed: int = 0


def validate_script(script: ScenarioScript, params: DerivedParams) -> None:
    """Check every script invariant, naming the offending segment/field."""
    if script.duration <= 0:
        raise ScenarioError("duration must be > 0")
    segs = script.segments
    for i, s in enumerate(segs):
        if s.activity not in ACTIVITIES:
            raise ScenarioError(
                f"segments[{i}].activity={s.activity!r} not one of {ACTIVITIES}"
            )
        if s.start_time < 0:
            raise ScenarioError(f"segments[{i}].start_time must be >= 0")
        if s.activity != "absent":
            if not (0.0 < s.start_range < params.max_unambiguous_range):
                raise ScenarioError(
                    f"segments[{i}].start_range={s.start_range} outside "
                    f"(0, {params.max_unambiguous_range:.1f}) m"
                )
        if s.activity == "walking" and abs(s.walk_speed) >= params.max_unambiguous_velocity:
            raise ScenarioError(
                f"segments[{i}].walk_speed={s.walk_speed} exceeds the "
                f"{params.max_unambiguous_velocity:.2f} m/s ambiguity limit"
            )
        if s.activity == "waving":
            peak = 2.0 * math.pi * s.wave_frequency * s.wave_amplitude
            if peak >= params.max_unambiguous_velocity:
                raise ScenarioError(
                    f"segments[{i}]: peak wave radial speed {peak:.2f} m/s exceeds "
                    f"the {params.max_unambiguous_velocity:.2f} m/s ambiguity limit"
                )
            if s.wave_amplitude < 0 or s.wave_frequency <= 0:
                raise ScenarioError(
                    f"segments[{i}]: wave_amplitude must be >= 0 and wave_frequency > 0"
                )
    for i in range(1, len(segs)):
        if segs[i].start_time <= segs[i - 1].start_time:
            raise ScenarioError(
                f"segments[{i - 1}] and segments[{i}] overlap: start_times must be "
                "strictly increasing"
            )
    for i, cl in enumerate(script.clutter):
        if not (0.0 < cl.range < params.max_unambiguous_range):
            raise ScenarioError(
                f"clutter[{i}].range={cl.range} outside "
                f"(0, {params.max_unambiguous_range:.1f}) m"
            )
        if cl.amplitude < 0:
            raise ScenarioError(f"clutter[{i}].amplitude must be >= 0")


def _segment_at(script: ScenarioScript, t: float) -> Segment | None:
    current = None
    for s in script.segments:
        if s.start_time <= t:
            current = s
        else:
            break
    return current


def scatterers_at(script: ScenarioScript, t: float) -> list[ScattererState]:
    """Evaluate the scripted scene at time ``t``.

    Returns the human scatterers (torso, plus a limb while waving) followed
    by the static clutter points. Times outside any segment behave as absent.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    out: list[ScattererState] = []
    seg = _segment_at(script, t)
    if seg is not None and seg.activity != "absent":
        tau = t - seg.start_time
        sway_w = 2.0 * math.pi * SWAY_FREQUENCY_HZ
        if seg.activity == "walking":
            torso_r = seg.start_range + seg.walk_speed * tau
            torso_v = seg.walk_speed
        else:
            torso_r = seg.start_range + SWAY_AMPLITUDE_M * math.sin(sway_w * tau)
            torso_v = SWAY_AMPLITUDE_M * sway_w * math.cos(sway_w * tau)
        out.append(ScattererState(torso_r, torso_v, TORSO_AMPLITUDE))
        if seg.activity == "waving":
            w = 2.0 * math.pi * seg.wave_frequency
            limb_r = torso_r + seg.wave_amplitude * math.sin(w * tau)
            limb_v = torso_v + seg.wave_amplitude * w * math.cos(w * tau)
            out.append(ScattererState(limb_r, limb_v, LIMB_AMPLITUDE_RATIO * TORSO_AMPLITUDE))
    for cl in script.clutter:
        out.append(ScattererState(cl.range, 0.0, cl.amplitude))
    return out


def _delay_ramp(delays: np.ndarray, n: int) -> np.ndarray:
    """Circular fractional-delay phase ramps, shape (len(delays), n).

    Signed FFT frequencies; the unpaired Nyquist bin is taken at its real
    part (cos) so that integer-bin correlation peaks carry no spurious phase.
    """
    k = sfft.fftfreq(n, d=1.0 / n)  # signed integer frequencies
    ramp = np.exp(-2j * np.pi * np.outer(delays, k) / n)
    if n % 2 == 0:
        ramp[:, n // 2] = np.cos(np.pi * delays)
    return ramp


def synthesize_pulse(
    reference: np.ndarray,
    scatterers: list[ScattererState],
    params: DerivedParams,
    snr_db: float | None,
    rng: np.random.Generator | None,
) -> np.ndarray:
    """Synthesize one baseband receive block.

    ``snr_db=None`` (or ``rng=None``) disables noise.
    """
    n = len(reference)
    ref_fft = sfft.fft(reference)
    spec = np.zeros(n, dtype=complex)
    if scatterers:
        ranges = np.array([s.range for s in scatterers])
        amps = np.array([s.amplitude for s in scatterers])
        delays = ranges / params.range_bin  # 2 r fs / c
        carrier = np.exp(-4j * np.pi * ranges / params.wavelength)
        ramps = _delay_ramp(delays, n)
        spec = ((amps * carrier)[:, None] * ramps).sum(axis=0) * ref_fft
    block = sfft.ifft(spec)
    if snr_db is not None and rng is not None:
        sigma2 = n * 10.0 ** (-snr_db / 10.0)
        scale = math.sqrt(sigma2 / 2.0)
        block = block + scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return block


def synthesize_cpi(
    reference: np.ndarray,
    script: ScenarioScript,
    params: DerivedParams,
    cpi_pulses: int,
    first_pulse_index: int,
    noise: bool = True,
    scene: bool = True,
    noise_stream: int = 0,
    dtype=np.complex64,
    workers: int | None = None,
) -> np.ndarray:
    """Synthesize one coherent frame of receive blocks, shape (P, N).

    Pulse p (global index ``first_pulse_index + p``) is evaluated at
    t = index * pri under stop-and-hop. The noise stream is split per global
    pulse index, so synthesis is deterministic regardless of batching or
    parallelism. ``scene=False`` keeps only clutter (target-free warm-up).

    Defaults to single precision for throughput; pass ``dtype=complex`` for
    reference-accuracy output (matches :func:`synthesize_pulse` pulse by
    pulse).
    """
    dtype = np.dtype(dtype)
    real_dtype = np.float32 if dtype == np.complex64 else np.float64
    n = len(reference)
    ref_fft = sfft.fft(np.asarray(reference, dtype=dtype))
    # per-pulse scatterer states, padded to a rectangular (P, S) layout
    per_pulse: list[list[ScattererState]] = []
    for p in range(cpi_pulses):
        t = (first_pulse_index + p) * params.pri
        if scene:
            per_pulse.append(scatterers_at(script, t))
        else:
            per_pulse.append([ScattererState(cl.range, 0.0, cl.amplitude)
                              for cl in script.clutter])
    n_scat = max((len(s) for s in per_pulse), default=0)
    spec = np.zeros((cpi_pulses, n), dtype=dtype)
    if n_scat:
        ranges = np.zeros((cpi_pulses, n_scat))
        amps = np.zeros((cpi_pulses, n_scat))
        for p, scats in enumerate(per_pulse):
            for s, sc in enumerate(scats):
                ranges[p, s] = sc.range
                amps[p, s] = sc.amplitude
        k = sfft.fftfreq(n, d=1.0 / n)
        for s in range(n_scat):
            r_col = ranges[:, s]
            coeff = (amps[:, s] * np.exp(-4j * np.pi * r_col / params.wavelength)).astype(dtype)
            d = r_col / params.range_bin
            if np.all(r_col == r_col[0]):
                # static scatterer: one shared fractional-delay ramp
                spec += coeff[:, None] * _delay_ramp(d[:1], n).astype(dtype)
            else:
                if dtype == np.complex64:
                    # single-precision phase: ~3e-3 rad worst case, well below
                    # the simulated noise floor
                    phase = d[:, None].astype(np.float32) * (k * (-2.0 * np.pi / n)).astype(np.float32)
                else:
                    # reduce mod 2 pi in double for reference accuracy
                    phase = ((d[:, None] * k) % n) * (-2.0 * np.pi / n)
                ramp = np.empty((cpi_pulses, n), dtype=dtype)
                ramp.real = np.cos(phase)
                ramp.imag = np.sin(phase)
                if n % 2 == 0:
                    ramp[:, n // 2] = np.cos(np.pi * d).astype(real_dtype)
                ramp *= coeff[:, None]
                spec += ramp
    spec *= ref_fft
    blocks = sfft.ifft(spec, axis=-1, workers=workers)
    if noise:
        sigma2 = n * 10.0 ** (-script.snr_db / 10.0)
        scale = math.sqrt(sigma2 / 2.0)
        for p in range(cpi_pulses):
            rng = np.random.default_rng([script.seed, noise_stream, first_pulse_index + p])
            if dtype == np.complex64:
                g = rng.standard_normal(2 * n, dtype=np.float32)
            else:
                g = rng.standard_normal(2 * n)
            blocks[p] += scale * (g[0::2] + 1j * g[1::2])
    return blocks


# --- scenario file I/O -----------------------------------------------------

def script_to_dict(script: ScenarioScript) -> dict:
    return asdict(script)


def script_from_dict(data: dict) -> ScenarioScript:
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be a JSON object")
    try:
        segments = [Segment(**s) for s in data.get("segments", [])]
    except TypeError as e:
        raise ScenarioError(f"bad segment field: {e}") from e
    try:
        clutter = [ClutterPoint(**c) for c in data.get("clutter", [])]
    except TypeError as e:
        raise ScenarioError(f"bad clutter field: {e}") from e
    known = {"segments", "clutter", "duration", "snr_db", "seed"}
    extra = set(data) - known
    if extra:
        raise ScenarioError(f"unknown scenario fields: {sorted(extra)}")
    return ScenarioScript(
        segments=segments,
        duration=float(data.get("duration", 10.0)),
        snr_db=float(data.get("snr_db", 20.0)),
        clutter=clutter,
        seed=int(data.get("seed", 0)),
    )


def load_scenario(path: str | Path, params: DerivedParams) -> ScenarioScript:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: invalid JSON at line {e.lineno} col {e.colno}: {e.msg}") from e
    try:
        script = script_from_dict(data)
        validate_script(script, params)
    except ScenarioError as e:
        raise ScenarioError(f"{path}: {e}") from e
    return script


def save_scenario(script: ScenarioScript, path: str | Path) -> None:
    Path(path).write_text(json.dumps(script_to_dict(script), indent=2) + "\n")
