"""In-memory scene/job registry with a background worker pool.

Single-process by design: job records live in memory, frames and job
JSON land on disk under the service data directory.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..pipeline.job import (AnimationJob, JobConfig, run_feedback_revision,
                            run_job)
from ..splat_io import Scene, SelectionMask


@dataclass
class SceneEntry:
    scene: Scene
    mask: SelectionMask


@dataclass
class JobEntry:
    job: AnimationJob
    scene_id: str
    out_dir: str
    events: list = field(default_factory=list)
    cond: threading.Condition = field(default_factory=threading.Condition)

    def emit(self, event: dict) -> None:
        with self.cond:
            self.events.append(event)
            self.cond.notify_all()

    @property
    def finished(self) -> bool:
        return self.job.status in ("done", "failed")


class Registry:
    """Serialized owner of all scene and job state."""

    def __init__(self, data_dir: str, transport_factory, workers: int = 2):
        self.data_dir = data_dir
        self.transport_factory = transport_factory
        self._lock = threading.Lock()
        self._scenes: dict[str, SceneEntry] = {}
        self._jobs: dict[str, JobEntry] = {}
        self._next_id = 0
        self._pool = ThreadPoolExecutor(max_workers=workers,
                                        thread_name_prefix="splatfx-job")

    def _fresh_id(self) -> str:
        with self._lock:
            self._next_id += 1
            return str(self._next_id)

    # scenes ---------------------------------------------------------------

    def add_scene(self, scene: Scene, mask: SelectionMask) -> str:
        scene_id = self._fresh_id()
        with self._lock:
            self._scenes[scene_id] = SceneEntry(scene=scene, mask=mask)
        return scene_id

    def scene(self, scene_id: str) -> SceneEntry | None:
        with self._lock:
            return self._scenes.get(scene_id)

    # jobs -----------------------------------------------------------------

    def job(self, job_id: str) -> JobEntry | None:
        with self._lock:
            return self._jobs.get(job_id)

    def submit(self, scene_id: str, prompt: str, config: JobConfig) -> str:
        entry = self.scene(scene_id)
        if entry is None:
            raise KeyError(scene_id)
        job_id = self._fresh_id()
        out_dir = os.path.join(self.data_dir, f"job_{job_id}")
        record = JobEntry(
            job=AnimationJob(id=job_id, user_prompt=prompt, config=config),
            scene_id=scene_id, out_dir=out_dir)
        with self._lock:
            self._jobs[job_id] = record
        self._pool.submit(self._run, record, entry, prompt, config)
        return job_id

    def _observer(self, record: JobEntry):
        def observe(job: AnimationJob) -> None:
            record.job = job
            event = {"status": job.status}
            if job.hypotheses is not None and any(
                    c.score is not None for c in job.hypotheses.candidates):
                event["scores"] = [c.score for c in job.hypotheses.candidates]
            if job.frame_count:
                event["frame_count"] = job.frame_count
            record.emit(event)
        return observe

    def _run(self, record: JobEntry, entry: SceneEntry, prompt: str,
             config: JobConfig) -> None:
        try:
            job = run_job(entry.scene, entry.mask, prompt, config,
                          self.transport_factory(), out_dir=record.out_dir,
                          job_id=record.job.id, observer=self._observer(record))
        except Exception as e:  # worker threads must never die silently
            record.job.diagnostics.append(str(e))
            record.job.advance("failed")
            record.emit({"status": "failed"})
            return
        record.job = job

    def submit_feedback(self, parent: JobEntry, feedback: str) -> str:
        job_id = self._fresh_id()
        out_dir = os.path.join(self.data_dir, f"job_{job_id}")
        record = JobEntry(
            job=AnimationJob(id=job_id, user_prompt=parent.job.user_prompt,
                             config=parent.job.config,
                             parent_id=parent.job.id,
                             revision=parent.job.revision + 1),
            scene_id=parent.scene_id, out_dir=out_dir)
        with self._lock:
            self._jobs[job_id] = record
        entry = self.scene(parent.scene_id)

        def work():
            try:
                job = run_feedback_revision(
                    entry.scene, entry.mask, parent.job, feedback,
                    self.transport_factory(), out_dir=out_dir, job_id=job_id)
            except Exception as e:
                record.job.diagnostics.append(str(e))
                record.job.advance("failed")
                record.emit({"status": "failed"})
                return
            record.job = job
            record.emit({"status": job.status, "frame_count": job.frame_count})

        self._pool.submit(work)
        return job_id
