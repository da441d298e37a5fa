"""End-to-end animation jobs: orchestration, persistence, revisions."""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..animation import PhasePlan, Timeline, sample_animation
from ..errors import ArgumentError, SplatfxError, StageError
from ..field_lang import FieldProgram
from ..renderer import Camera, encode_png, encode_sequence, rasterize, render_frames
from ..splat_io import Scene, SelectionMask, bounds, full_mask
from .stages import (HypothesisSet, auto_refine, best_index, derive_behaviors,
                     design_phase, feedback_refine, sample_hypotheses,
                     score_hypothesis, select_best)
from .transport import ModelTransport

STATUS_ORDER = ["queued", "designing", "generating", "scoring", "refining", "done"]


@dataclass
class JobConfig:
    m: int = 4
    fps: float = 30.0
    auto_rounds: int = 1
    seed: int = 0
    width: int = 512
    height: int = 512
    score_size: int = 256
    duration_hint: float = 3.0
    temperature_base: float = 0.7
    temperature_step: float = 0.1
    background: tuple = (0.0, 0.0, 0.0)
    workers: int | None = None

    def to_dict(self) -> dict:
        return {"m": self.m, "fps": self.fps, "auto_rounds": self.auto_rounds,
                "seed": self.seed, "width": self.width, "height": self.height,
                "score_size": self.score_size, "duration_hint": self.duration_hint,
                "temperature_base": self.temperature_base,
                "temperature_step": self.temperature_step,
                "background": list(self.background)}


@dataclass
class AnimationJob:
    id: str
    user_prompt: str
    config: JobConfig
    status: str = "queued"
    phases: PhasePlan | None = None
    hypotheses: HypothesisSet | None = None
    selected: FieldProgram | None = None
    selected_index: int | None = None
    refinement_history: list = field(default_factory=list)
    transcript: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    frame_count: int = 0
    frames_dir: str = ""
    failed_stage: str = ""
    parent_id: str | None = None
    revision: int = 1
    created_at: float = 0.0
    finished_at: float = 0.0

    def advance(self, status: str) -> None:
        """Status only moves forward along the pipeline; 'failed' is
        reachable from anywhere."""
        if status == "failed":
            self.status = status
            return
        if STATUS_ORDER.index(status) < STATUS_ORDER.index(self.status):
            raise ValueError(f"status cannot move back: {self.status} -> {status}")
        self.status = status

    def to_dict(self) -> dict:
        def prog(p: FieldProgram | None):
            if p is None:
                return None
            return {"sources": dict(p.source_text), "duration": p.duration,
                    "seed": p.seed}

        return {
            "id": self.id,
            "prompt": self.user_prompt,
            "config": self.config.to_dict(),
            "status": self.status,
            "phases": None if self.phases is None else {
                "total_duration": self.phases.total_duration,
                "phases": [{"name": p.name, "t_start": p.t_start,
                            "t_end": p.t_end, "description": p.description}
                           for p in self.phases.phases]},
            "hypotheses": None if self.hypotheses is None else [
                {"program": prog(c.program), "score": c.score}
                for c in self.hypotheses.candidates],
            "selected": prog(self.selected),
            "selected_index": self.selected_index,
            "refinement_history": self.refinement_history,
            "transcript": self.transcript,
            "diagnostics": self.diagnostics,
            "frame_count": self.frame_count,
            # relative so job records are diffable across output directories
            "frames_dir": os.path.basename(self.frames_dir) if self.frames_dir else "",
            "failed_stage": self.failed_stage,
            "parent_id": self.parent_id,
            "revision": self.revision,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
        }


def save_job(job: AnimationJob, path) -> None:
    with open(path, "w") as f:
        json.dump(job.to_dict(), f, indent=1, sort_keys=True)
        f.write("\n")


def save_program(program: FieldProgram, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for key in ("position", "color", "alpha"):
        (d / f"{key}.dsl").write_text(program.source_text[key] + "\n")
    (d / "program.json").write_text(json.dumps(
        {"duration": program.duration, "seed": program.seed}, sort_keys=True) + "\n")


def load_program(directory) -> FieldProgram:
    d = Path(directory)
    meta = json.loads((d / "program.json").read_text())
    return FieldProgram.from_sources(
        position=(d / "position.dsl").read_text().strip(),
        color=(d / "color.dsl").read_text().strip(),
        alpha=(d / "alpha.dsl").read_text().strip(),
        duration=meta["duration"], seed=meta.get("seed", 0))


def scoring_cameras(scene: Scene, mask: SelectionMask, up=(0.0, 0.0, 1.0)):
    """Two viewpoints framing the whole scene, aimed at the selection."""
    scene_box = bounds(scene, full_mask(scene))
    target = bounds(scene, mask).center if len(mask) else scene_box.center
    distance = max(float(np.linalg.norm(scene_box.size)), 1e-3) * 1.8
    cams = []
    for azimuth in (30.0, 120.0):
        az = math.radians(azimuth)
        el = math.radians(20.0)
        offset = distance * np.array([
            math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])
        cams.append(Camera(eye=target + offset, target=target,
                           up=np.asarray(up, dtype=np.float64), vertical_fov=50.0))
    return cams


def snapshot_frames(scene: Scene, mask: SelectionMask, program: FieldProgram,
                    config: JobConfig) -> list[bytes]:
    """3 time samples x 2 viewpoints, PNG-encoded, for VLM consumption."""
    times = [0.0, program.duration / 2.0, program.duration]
    pngs = []
    for cam in scoring_cameras(scene, mask):
        for t in times:
            from ..animation import apply_field
            img = rasterize(apply_field(scene, mask, program, t), cam,
                            config.score_size, config.score_size,
                            config.background)
            pngs.append(encode_png(img))
    return pngs


def render_animation(scene: Scene, mask: SelectionMask, program: FieldProgram,
                     config: JobConfig, out_dir) -> list:
    """Render the full timeline to frame_%05d.png files under out_dir."""
    timeline = Timeline(duration=program.duration, fps=config.fps)
    states = sample_animation(scene, mask, program, timeline)
    camera = scoring_cameras(scene, mask)[0]
    images = render_frames(states, camera, config.width, config.height,
                           config.background, workers=config.workers)
    return encode_sequence(images, out_dir)


def run_job(scene: Scene, mask: SelectionMask, user_prompt: str,
            config: JobConfig, transport: ModelTransport,
            out_dir=None, job_id: str = "job", observer=None) -> AnimationJob:
    """design -> behaviors -> m hypotheses -> score -> select -> auto-refine
    -> final render.  In replay mode the whole run is deterministic and
    wall-clock fields stay zero.  `observer(job)` is called after every
    visible progress step."""
    replay = transport.mode == "replay"
    job = AnimationJob(id=job_id, user_prompt=user_prompt, config=config,
                       created_at=0.0 if replay else time.time())

    def note(status: str) -> None:
        job.advance(status)
        if observer is not None:
            observer(job)

    try:
        if not user_prompt.strip():
            raise ArgumentError("empty animation prompt")
        box = bounds(scene, mask) if len(mask) else None
        bbox_text = ("unknown" if box is None else
                     f"min {np.round(box.min, 3).tolist()} "
                     f"max {np.round(box.max, 3).tolist()}")

        note("designing")
        job.phases = design_phase(
            transport, user_prompt, bbox_text=bbox_text,
            duration_hint=config.duration_hint, transcript=job.transcript)
        behaviors = derive_behaviors(transport, job.phases, user_prompt,
                                     transcript=job.transcript)

        note("generating")
        job.hypotheses = sample_hypotheses(
            transport, behaviors, job.phases, config.m, seed=config.seed,
            temperature_base=config.temperature_base,
            temperature_step=config.temperature_step, transcript=job.transcript)

        note("scoring")
        for cand in job.hypotheses.candidates:
            frames = snapshot_frames(scene, mask, cand.program, config)
            cand.score = float(score_hypothesis(transport, frames, user_prompt,
                                                transcript=job.transcript))
            if observer is not None:
                observer(job)
        job.selected_index = best_index(
            [c.score for c in job.hypotheses.candidates])
        job.selected = select_best(job.hypotheses)

        note("refining")
        if config.auto_rounds > 0:
            frames = snapshot_frames(scene, mask, job.selected, config)
            refined = auto_refine(transport, job.selected, frames, user_prompt,
                                  config.auto_rounds, plan=job.phases,
                                  transcript=job.transcript)
            if refined is not job.selected:
                job.refinement_history.append(
                    {"kind": "auto", "input": "",
                     "sources": dict(refined.source_text)})
            job.selected = refined

        if out_dir is not None:
            frames_dir = os.path.join(str(out_dir), "frames")
            paths = render_animation(scene, mask, job.selected, config, frames_dir)
            job.frames_dir = frames_dir
            job.frame_count = len(paths)
        note("done")
    except SplatfxError as e:
        job.failed_stage = e.stage if isinstance(e, StageError) else type(e).__name__
        job.diagnostics.append(str(e))
        note("failed")
    job.finished_at = 0.0 if replay else time.time()
    if out_dir is not None:
        os.makedirs(str(out_dir), exist_ok=True)
        if job.selected is not None:
            save_program(job.selected, os.path.join(str(out_dir), "program"))
        save_job(job, os.path.join(str(out_dir), "job.json"))
    return job


def run_feedback_revision(scene: Scene, mask: SelectionMask, parent: AnimationJob,
                          feedback: str, transport: ModelTransport,
                          out_dir=None, job_id: str | None = None) -> AnimationJob:
    """Conversational refinement: a new job revision linked to its parent;
    history is never mutated."""
    if parent.status != "done" or parent.selected is None:
        raise ArgumentError(f"parent job {parent.id} is not done")
    if not feedback.strip():
        raise ArgumentError("empty feedback")
    replay = transport.mode == "replay"
    config = parent.config
    job = AnimationJob(
        id=job_id or f"{parent.id}-r{parent.revision + 1}",
        user_prompt=parent.user_prompt, config=config,
        phases=parent.phases, hypotheses=parent.hypotheses,
        parent_id=parent.id, revision=parent.revision + 1,
        refinement_history=list(parent.refinement_history),
        created_at=0.0 if replay else time.time())
    try:
        job.advance("refining")
        frames = snapshot_frames(scene, mask, parent.selected, config)
        revised = feedback_refine(transport, parent.selected, frames,
                                  parent.user_prompt, feedback,
                                  transcript=job.transcript)
        job.selected = revised
        job.selected_index = parent.selected_index
        job.refinement_history.append(
            {"kind": "feedback", "input": feedback,
             "sources": dict(revised.source_text)})
        if out_dir is not None:
            frames_dir = os.path.join(str(out_dir), "frames")
            paths = render_animation(scene, mask, revised, config, frames_dir)
            job.frames_dir = frames_dir
            job.frame_count = len(paths)
        job.advance("done")
    except SplatfxError as e:
        job.failed_stage = e.stage if isinstance(e, StageError) else type(e).__name__
        job.diagnostics.append(str(e))
        job.advance("failed")
    job.finished_at = 0.0 if replay else time.time()
    if out_dir is not None:
        os.makedirs(str(out_dir), exist_ok=True)
        if job.selected is not None:
            save_program(job.selected, os.path.join(str(out_dir), "program"))
        save_job(job, os.path.join(str(out_dir), "job.json"))
    return job
