"""Command line entry points.

Exit codes: 0 ok, 2 configuration/scenario error, 3 runtime error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import AppConfig, load_config, with_overrides
from .params import ConfigError, derive
from .pipeline import bench as run_bench
from .pipeline import run_pipeline, write_events_csv, write_events_ndjson
from .scene import ScenarioError, ScenarioScript, load_scenario, synthesize_cpi
from . import iofmt
from .waveform import zadoff_chu

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; defaults apply for missing fields.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--json", "as_json", is_flag=True, help="JSON output where supported.")
@click.pass_context
def cli(ctx, config_path, seed, as_json):
    """Range-Doppler sensing pipeline twin."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["seed"] = seed
    ctx.obj["json"] = as_json


def _load(ctx) -> AppConfig:
    return load_config(ctx.obj["config_path"])


def _load_script(ctx, cfg: AppConfig, scenario: str) -> ScenarioScript:
    script = load_scenario(scenario, derive(cfg.system))
    if ctx.obj["seed"] is not None:
        script.seed = ctx.obj["seed"]
    return script


@cli.command("derive-params")
@click.pass_context
def derive_params_cmd(ctx):
    """Print every derived physical parameter."""
    cfg = _load(ctx)
    params = derive(cfg.system)
    d = params.as_dict()
    if ctx.obj["json"]:
        click.echo(json.dumps(d))
        return
    units = {
        "wavelength": "m", "range_bin": "m", "sequence_duration": "s",
        "pri": "s", "cpi": "s", "velocity_bin": "m/s",
        "max_unambiguous_velocity": "m/s", "max_unambiguous_range": "m",
        "frame_rate": "Hz",
    }
    width = max(len(k) for k in d)
    for k, v in d.items():
        click.echo(f"{k:<{width}}  {v:.9g} {units[k]}")


@cli.command()
@click.option("--scenario", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--frames", type=int, default=None, help="CPI frames to synthesize.")
@click.pass_context
def simulate(ctx, scenario, out, frames):
    """Synthesize raw pulse blocks from a scenario into a binary I/Q file."""
    cfg = _load(ctx)
    script = _load_script(ctx, cfg, scenario)
    params = derive(cfg.system)
    p = cfg.system.cpi_pulses
    n_frames = frames if frames is not None else int(script.duration / params.cpi)
    reference = zadoff_chu(cfg.system.sequence_length, cfg.system.zc_root)
    with open(out, "wb") as fh:
        iofmt.write_pulse_header(fh, cfg.system.sequence_length, n_frames * p,
                                 cfg.system.sample_rate)
        for f in range(n_frames):
            blocks = synthesize_cpi(reference, script, params, p, first_pulse_index=f * p)
            iofmt.append_pulses(fh, blocks)
    click.echo(f"wrote {n_frames * p} pulses to {out}")


@cli.command()
@click.option("--scenario", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Event CSV path.")
@click.option("--ndjson", "ndjson_path", type=click.Path(), default=None,
              help="Also write a newline-delimited JSON mirror (with compute_time).")
@click.option("--dump-rd", "dump_dir", type=click.Path(), default=None,
              help="Directory for per-frame range-Doppler dumps.")
@click.option("--png", is_flag=True, help="Also write grayscale PNGs of dumped maps.")
@click.option("--frames", type=int, default=None)
@click.option("--thr-up", type=float, default=None, help="Upper hysteresis offset, dB above floor.")
@click.option("--thr-down", type=float, default=None, help="Lower hysteresis offset, dB above floor.")
@click.option("--scope-min-m", type=float, default=None)
@click.option("--scope-max-m", type=float, default=None)
@click.option("--guard-bins", type=int, default=None)
@click.pass_context
def run(ctx, scenario, out, ndjson_path, dump_dir, png, frames,
        thr_up, thr_down, scope_min_m, scope_max_m, guard_bins):
    """Run the full pipeline on a scenario and write the per-frame event log."""
    cfg = with_overrides(
        _load(ctx), thr_up_db=thr_up, thr_down_db=thr_down,
        scope_min_m=scope_min_m, scope_max_m=scope_max_m, guard_bins=guard_bins,
    )
    script = _load_script(ctx, cfg, scenario)
    on_map = None
    if dump_dir is not None:
        ddir = Path(dump_dir)
        ddir.mkdir(parents=True, exist_ok=True)

        def on_map(rd):
            iofmt.write_rdmap(ddir / f"rd_{rd.frame_index:05d}.bin", rd)
            if png:
                iofmt.write_rdmap_png(ddir / f"rd_{rd.frame_index:05d}.png", rd)

    events = list(run_pipeline(script, cfg, n_frames=frames, on_map=on_map))
    write_events_csv(events, out)
    if ndjson_path is not None:
        write_events_ndjson(events, ndjson_path)
    n_match = sum(e.state == e.truth_state for e in events)
    click.echo(f"{len(events)} frames -> {out} "
               f"({n_match}/{len(events)} frames match scripted ground truth)")


@cli.command("bench")
@click.option("--frames", type=int, default=20)
@click.pass_context
def bench_cmd(ctx, frames):
    """Measure per-CPI compute time and the real-time factor."""
    cfg = _load(ctx)
    report = run_bench(cfg, frames)
    if ctx.obj["json"]:
        click.echo(json.dumps({
            "n_frames": report.n_frames,
            "mean_s": report.mean_s,
            "p95_s": report.p95_s,
            "cpi_s": report.cpi_s,
            "real_time_factor": report.real_time_factor,
        }))
        return
    for line in report.lines():
        click.echo(line)


@cli.command()
@click.option("--port", type=int, default=8765)
@click.option("--host", default="127.0.0.1")
@click.option("--max-clients", type=int, default=8)
@click.option("--ui-dir", type=click.Path(exists=True), default=None,
              help="Serve a static UI bundle at /.")
@click.option("--scenario", type=click.Path(exists=True), default=None,
              help="Initial scripted scene; defaults to an absent target at 5 m.")
@click.pass_context
def serve(ctx, port, host, max_clients, ui_dir, scenario):
    """Run the live streaming gateway (WebSocket at /ws)."""
    import uvicorn

    from .gateway import build_app

    cfg = _load(ctx)
    script = _load_script(ctx, cfg, scenario) if scenario else None
    app = build_app(cfg, script=script, ui_dir=ui_dir, max_clients=max_clients)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None) -> int:
    try:
        cli(args=argv, standalone_mode=False, obj={})
        return 0
    except (ConfigError, ScenarioError) as e:
        click.echo(f"config error: {e}", err=True)
        return EXIT_CONFIG
    except click.ClickException as e:
        e.show()
        return EXIT_CONFIG
    except click.Abort:
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - CLI boundary
        click.echo(f"runtime error: {e}", err=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
