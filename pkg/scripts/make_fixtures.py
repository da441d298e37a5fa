#!/usr/bin/env python3
"""Build the vase_raise fixture bundle.

Writes a deterministic synthetic vase scene plus a recorded transcript of
every model exchange needed to replay the full animation pipeline offline:
the initial job, one conversational feedback revision, and an alignment
score over a small frame pair.  Run from the repository root:

    python3 scripts/make_fixtures.py
"""

import os
import shutil
import sys
import tempfile

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from splatfx.metrics import vqascore                      # noqa: E402
from splatfx.pipeline import (CannedBackend, JobConfig, make_transport,  # noqa: E402
                              run_feedback_revision, run_job)
from splatfx.renderer import encode_png, rasterize        # noqa: E402
from splatfx.animation import apply_field                 # noqa: E402
from splatfx.pipeline.job import scoring_cameras          # noqa: E402
from splatfx.splat_io import Scene, full_mask, load_scene, save_scene  # noqa: E402

FIXTURES = os.path.join(ROOT, "fixtures", "vase_raise")
PROMPT = "raise the vase, then fade it out"
FEEDBACK = ("spin faster in the first second, "
            "fade more quickly in the final half-second")


def vase_scene(n=1000, seed=20240601) -> Scene:
    """Splats on a vase-of-revolution surface, fully opaque, warm colors."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    h = rng.uniform(0.0, 1.0, n)
    r = 0.25 + 0.15 * np.sin(np.pi * h) - 0.1 * h
    positions = np.stack([r * np.cos(theta), r * np.sin(theta), h], axis=1)
    rotations = np.zeros((n, 4))
    rotations[:, 0] = 1.0
    scales = np.full((n, 3), 0.02)
    rgb = np.stack([0.7 + 0.2 * h, 0.45 + 0.1 * np.cos(theta), 0.3 + 0.2 * h],
                   axis=1)
    sh_dc = (rgb - 0.5) / 0.28209479177387814
    return Scene(positions=positions, rotations=rotations, scales=scales,
                 sh_dc=sh_dc, opacities=np.ones(n))


def main() -> None:
    os.environ.pop("SPLATFX_MODEL", None)  # pin the default model name
    if os.path.isdir(FIXTURES):
        shutil.rmtree(FIXTURES)
    os.makedirs(FIXTURES)

    scene_path = os.path.join(FIXTURES, "scene.ply")
    save_scene(vase_scene(), scene_path)
    scene = load_scene(scene_path)  # float32-quantized, as replays will see it
    mask = full_mask(scene)
    with open(os.path.join(FIXTURES, "mask.txt"), "w") as f:
        f.write("\n".join(str(i) for i in range(len(scene))) + "\n")

    transport = make_transport("record", fixtures=FIXTURES,
                               backend=CannedBackend())
    config = JobConfig()
    with tempfile.TemporaryDirectory() as tmp:
        job = run_job(scene, mask, PROMPT, config, transport,
                      out_dir=os.path.join(tmp, "v1"), job_id="fixture")
        assert job.status == "done", job.diagnostics
        print(f"job recorded: {job.frame_count} frames, "
              f"scores {[c.score for c in job.hypotheses.candidates]}")

        revision = run_feedback_revision(scene, mask, job, FEEDBACK, transport,
                                         out_dir=os.path.join(tmp, "v2"))
        assert revision.status == "done", revision.diagnostics
        print(f"feedback revision recorded: {revision.frame_count} frames")

    # small frame pair plus its recorded alignment exchange for `score`
    frames_dir = os.path.join(FIXTURES, "score_frames")
    os.makedirs(frames_dir)
    camera = scoring_cameras(scene, mask)[0]
    frames = []
    for k, t in enumerate((0.0, job.selected.duration)):
        png = encode_png(rasterize(apply_field(scene, mask, job.selected, t),
                                   camera, 64, 64))
        with open(os.path.join(frames_dir, f"frame_{k:05d}.png"), "wb") as f:
            f.write(png)
        frames.append(png)
    score = vqascore(frames, PROMPT, transport)
    print(f"alignment recorded: p={score.probability:.6f} ({score.method})")


if __name__ == "__main__":
    main()
