"""HTTP/SSE API exposing the animation engine to the web client."""

from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import dataclass

from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..errors import SplatfxError
from ..pipeline.job import JobConfig
from ..pipeline.scripted import CannedBackend
from ..pipeline.transport import make_transport
from ..splat_io import full_mask, load_mask, load_scene
from .models import (FeedbackAccepted, FeedbackRequest, HypothesisView,
                     JobAccepted, JobRequest, JobStatusView, PhaseView,
                     SceneUploadResponse)
from .registry import JobEntry, Registry

HEARTBEAT_SECONDS = 5.0


@dataclass
class ServiceConfig:
    data_dir: str = ""
    transport_mode: str = "live"
    fixtures: str | None = None
    backend: str = "http"        # "http" or "canned"
    model: str | None = None
    workers: int = 2
    cors_origin: str = "*"
    frontend_dir: str | None = None


def _transport_factory(config: ServiceConfig):
    backend = CannedBackend() if config.backend == "canned" else None

    def factory():
        return make_transport(config.transport_mode, fixtures=config.fixtures,
                              backend=backend, model=config.model)
    return factory


def _status_view(entry: JobEntry) -> JobStatusView:
    job = entry.job
    phases = []
    total = None
    if job.phases is not None:
        total = job.phases.total_duration
        phases = [PhaseView(name=p.name, t_start=p.t_start, t_end=p.t_end,
                            description=p.description)
                  for p in job.phases.phases]
    scores = []
    if job.hypotheses is not None:
        scores = [HypothesisView(index=k, score=c.score,
                                 sources=dict(c.program.source_text))
                  for k, c in enumerate(job.hypotheses.candidates)]
    return JobStatusView(
        id=job.id, status=job.status, prompt=job.user_prompt,
        phases=phases, total_duration=total, scores=scores,
        selected_index=job.selected_index,
        selected_sources=None if job.selected is None
        else dict(job.selected.source_text),
        frame_count=job.frame_count, fps=job.config.fps,
        revision=job.revision, parent_id=job.parent_id,
        diagnostics=list(job.diagnostics))


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    if not config.data_dir:
        config.data_dir = tempfile.mkdtemp(prefix="splatfx-")
    os.makedirs(config.data_dir, exist_ok=True)
    registry = Registry(config.data_dir, _transport_factory(config),
                        workers=config.workers)

    app = FastAPI(title="splatfx")
    app.state.registry = registry
    app.state.config = config
    app.add_middleware(
        CORSMiddleware, allow_origins=[config.cors_origin],
        allow_methods=["*"], allow_headers=["*"])

    @app.get("/api/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/api/scenes", response_model=SceneUploadResponse)
    async def upload_scene(splat: UploadFile = File(...),
                           mask: UploadFile | None = File(default=None)):
        scene_dir = os.path.join(config.data_dir, "uploads")
        os.makedirs(scene_dir, exist_ok=True)
        splat_path = os.path.join(scene_dir, f"upload_{time.time_ns()}.ply")
        with open(splat_path, "wb") as f:
            f.write(await splat.read())
        try:
            scene = load_scene(splat_path)
            if mask is not None:
                mask_path = splat_path + ".mask.txt"
                with open(mask_path, "wb") as f:
                    f.write(await mask.read())
                selection = load_mask(mask_path, scene)
            else:
                selection = full_mask(scene)
        except SplatfxError as e:
            raise HTTPException(status_code=400, detail=str(e))
        scene_id = registry.add_scene(scene, selection)
        return SceneUploadResponse(scene_id=scene_id, splat_count=len(scene),
                                   mask_size=len(selection))

    @app.post("/api/jobs", response_model=JobAccepted, status_code=202)
    def submit_job(req: JobRequest):
        if not req.prompt.strip():
            raise HTTPException(status_code=422, detail="empty prompt")
        if registry.scene(req.scene_id) is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown scene {req.scene_id}")
        job_config = JobConfig(m=req.m, fps=req.fps,
                               duration_hint=req.duration_hint,
                               auto_rounds=req.auto_rounds,
                               width=req.width, height=req.height)
        job_id = registry.submit(req.scene_id, req.prompt, job_config)
        return JobAccepted(job_id=job_id)

    def _entry_or_404(job_id: str) -> JobEntry:
        entry = registry.job(job_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return entry

    @app.get("/api/jobs/{job_id}", response_model=JobStatusView)
    def job_status(job_id: str):
        return _status_view(_entry_or_404(job_id))

    @app.get("/api/jobs/{job_id}/frames/{k}")
    def job_frame(job_id: str, k: int):
        entry = _entry_or_404(job_id)
        if not entry.job.frames_dir or k < 0 or k >= entry.job.frame_count:
            raise HTTPException(status_code=404, detail=f"no frame {k}")
        path = os.path.join(entry.job.frames_dir, f"frame_{k:05d}.png")
        return FileResponse(path, media_type="image/png")

    @app.get("/api/jobs/{job_id}/stream")
    def job_stream(job_id: str):
        entry = _entry_or_404(job_id)

        def gen():
            cursor = 0
            while True:
                with entry.cond:
                    if cursor >= len(entry.events) and not entry.finished:
                        entry.cond.wait(timeout=HEARTBEAT_SECONDS)
                    pending = entry.events[cursor:]
                    cursor += len(pending)
                    finished = entry.finished and cursor >= len(entry.events)
                if not pending and not finished:
                    yield ": ping\n\n"
                    continue
                for event in pending:
                    yield f"event: job\ndata: {json.dumps(event, sort_keys=True)}\n\n"
                if finished:
                    final = {"status": entry.job.status,
                             "frame_count": entry.job.frame_count,
                             "job_id": entry.job.id}
                    yield f"event: end\ndata: {json.dumps(final, sort_keys=True)}\n\n"
                    return

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.post("/api/jobs/{job_id}/feedback", response_model=FeedbackAccepted,
              status_code=202)
    def job_feedback(job_id: str, req: FeedbackRequest):
        entry = _entry_or_404(job_id)
        if not req.text.strip():
            raise HTTPException(status_code=422, detail="empty feedback")
        if entry.job.status != "done":
            raise HTTPException(
                status_code=409,
                detail=f"job {job_id} is {entry.job.status}, not done")
        new_id = registry.submit_feedback(entry, req.text)
        return FeedbackAccepted(job_id=new_id,
                                revision=entry.job.revision + 1)

    if config.frontend_dir and os.path.isdir(config.frontend_dir):
        app.mount("/", StaticFiles(directory=config.frontend_dir, html=True),
                  name="frontend")

    return app
