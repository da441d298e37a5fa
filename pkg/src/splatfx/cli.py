"""Command-line driver: batch animation runs, rendering, scoring,
fixture verification, and serving.

Config precedence is flags > environment > config file (a single JSON
document passed with --config).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .animation import apply_field
from .errors import ArgumentError, SplatfxError, TimeRangeError
from .metrics import vqascore
from .pipeline.job import (JobConfig, load_program, run_job, scoring_cameras)
from .pipeline.scripted import CannedBackend
from .pipeline.transport import TranscriptStore, make_transport
from .renderer import Camera, encode_png, rasterize
from .splat_io import full_mask, load_mask, load_scene


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise click.UsageError(f"cannot read config file {path}: {e}")


def _merge(flag, config: dict, key: str, default):
    # explicit flag wins; config file fills in; then the built-in default
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _make_transport(mode: str, fixtures: str | None, backend: str):
    if mode in ("record", "replay") and not fixtures:
        raise click.UsageError(f"--transport {mode} requires --fixtures DIR")
    backend_obj = CannedBackend() if backend == "canned" else None
    try:
        return make_transport(mode, fixtures=fixtures, backend=backend_obj)
    except ArgumentError as e:
        raise click.UsageError(str(e))


def _load_scene_and_mask(scene_path: str, mask_path: str | None):
    scene = load_scene(scene_path)
    mask = load_mask(mask_path, scene) if mask_path else full_mask(scene)
    return scene, mask


@click.group()
def main():
    """Text-driven animation of Gaussian splat scenes."""


@main.command()
@click.option("--scene", "scene_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mask", "mask_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--prompt", required=True)
@click.option("--m", "m", type=int, default=None, help="hypothesis count")
@click.option("--fps", type=float, default=None)
@click.option("--duration", type=float, default=None, help="duration hint, seconds")
@click.option("--auto-rounds", type=int, default=None)
@click.option("--transport", "transport_mode",
              type=click.Choice(["live", "record", "replay"]), default="live")
@click.option("--fixtures", type=click.Path(file_okay=False), default=None)
@click.option("--backend", type=click.Choice(["http", "canned"]), default="http")
@click.option("--width", type=int, default=None)
@click.option("--height", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def animate(scene_path, mask_path, prompt, m, fps, duration, auto_rounds,
            transport_mode, fixtures, backend, width, height, config_path,
            out_dir):
    """Run the full prompt-to-animation pipeline and write frames,
    program sources, and job.json to --out."""
    cfg_file = _load_config_file(config_path)
    config = JobConfig(
        m=int(_merge(m, cfg_file, "m", 4)),
        fps=float(_merge(fps, cfg_file, "fps", 30.0)),
        duration_hint=float(_merge(duration, cfg_file, "duration", 3.0)),
        auto_rounds=int(_merge(auto_rounds, cfg_file, "auto_rounds", 1)),
        width=int(_merge(width, cfg_file, "width", 512)),
        height=int(_merge(height, cfg_file, "height", 512)),
    )
    transport = _make_transport(transport_mode, fixtures, backend)
    try:
        scene, mask = _load_scene_and_mask(scene_path, mask_path)
    except SplatfxError as e:
        raise click.UsageError(str(e))
    job = run_job(scene, mask, prompt, config, transport, out_dir=out_dir)
    if job.status != "done":
        click.echo(f"job failed at stage: {job.failed_stage}", err=True)
        for diag in job.diagnostics:
            click.echo(diag, err=True)
        sys.exit(1)
    click.echo(f"done: {job.frame_count} frames in {job.frames_dir}")


@main.command()
@click.option("--scene", "scene_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mask", "mask_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--program", "program_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--t", "t", type=float, required=True)
@click.option("--camera", "camera_path", type=click.Path(exists=True), default=None)
@click.option("--width", type=int, default=512)
@click.option("--height", type=int, default=512)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def render(scene_path, mask_path, program_dir, t, camera_path, width, height,
           out_path):
    """Render one frame of a saved program at time t."""
    try:
        scene, mask = _load_scene_and_mask(scene_path, mask_path)
        program = load_program(program_dir)
    except SplatfxError as e:
        raise click.UsageError(str(e))
    if camera_path:
        spec = json.loads(Path(camera_path).read_text())
        camera = Camera(eye=np.asarray(spec["eye"], dtype=np.float64),
                        target=np.asarray(spec["target"], dtype=np.float64),
                        up=np.asarray(spec.get("up", [0, 0, 1]), dtype=np.float64),
                        vertical_fov=float(spec.get("vertical_fov", 50.0)),
                        near=float(spec.get("near", 0.05)))
    else:
        camera = scoring_cameras(scene, mask)[0]
    try:
        state = apply_field(scene, mask, program, t)
    except TimeRangeError as e:
        click.echo(str(e), err=True)
        sys.exit(1)
    image = rasterize(state, camera, width, height)
    Path(out_path).write_bytes(encode_png(image))
    click.echo(out_path)


@main.command()
@click.option("--frames", "frames_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--prompt", required=True)
@click.option("--transport", "transport_mode",
              type=click.Choice(["live", "record", "replay"]), default="live")
@click.option("--fixtures", type=click.Path(file_okay=False), default=None)
@click.option("--backend", type=click.Choice(["http", "canned"]), default="http")
def score(frames_dir, prompt, transport_mode, fixtures, backend):
    """Compute the text-video alignment probability for a frame directory."""
    transport = _make_transport(transport_mode, fixtures, backend)
    paths = sorted(Path(frames_dir).glob("frame_*.png"))
    if len(paths) < 2:
        raise click.UsageError(f"need at least 2 frame_*.png files in {frames_dir}")
    frames = [p.read_bytes() for p in paths]
    try:
        result = vqascore(frames, prompt, transport)
    except SplatfxError as e:
        click.echo(str(e), err=True)
        sys.exit(1)
    click.echo(f"{result.probability:.3f}")


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--transport", "transport_mode",
              type=click.Choice(["live", "record", "replay"]), default="live")
@click.option("--fixtures", type=click.Path(file_okay=False), default=None)
@click.option("--backend", type=click.Choice(["http", "canned"]), default="http")
@click.option("--data-dir", type=click.Path(file_okay=False), default=None)
@click.option("--frontend", "frontend_dir", type=click.Path(file_okay=False),
              default=None)
def serve(port, host, transport_mode, fixtures, backend, data_dir, frontend_dir):
    """Run the HTTP/SSE service."""
    import uvicorn

    from .service import ServiceConfig, create_app
    if transport_mode in ("record", "replay") and not fixtures:
        raise click.UsageError(f"--transport {transport_mode} requires --fixtures")
    app = create_app(ServiceConfig(
        data_dir=data_dir or "", transport_mode=transport_mode,
        fixtures=fixtures, backend=backend, frontend_dir=frontend_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("replay-verify")
@click.option("--fixtures", required=True, type=click.Path(exists=True,
                                                           file_okay=False))
def replay_verify(fixtures):
    """Check that every transcript entry still hashes to its key."""
    store = TranscriptStore(fixtures)
    bad = store.verify()
    if bad:
        for key in bad:
            click.echo(f"hash mismatch: {key}", err=True)
        sys.exit(1)
    click.echo(f"ok: {len(store.entries)} entries verified")


if __name__ == "__main__":
    main()
