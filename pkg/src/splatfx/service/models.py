"""Request/response schemas for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SceneUploadResponse(BaseModel):
    scene_id: str
    splat_count: int
    mask_size: int


class JobRequest(BaseModel):
    scene_id: str
    prompt: str
    m: int = Field(default=4, ge=1, le=16)
    fps: float = Field(default=30.0, gt=0)
    duration_hint: float = Field(default=3.0, gt=0)
    auto_rounds: int = Field(default=1, ge=0)
    width: int = Field(default=512, gt=0, le=2048)
    height: int = Field(default=512, gt=0, le=2048)


class JobAccepted(BaseModel):
    job_id: str


class PhaseView(BaseModel):
    name: str
    t_start: float
    t_end: float
    description: str


class HypothesisView(BaseModel):
    index: int
    score: float | None
    sources: dict | None


class JobStatusView(BaseModel):
    id: str
    status: str
    prompt: str
    phases: list[PhaseView] = []
    total_duration: float | None = None
    scores: list[HypothesisView] = []
    selected_index: int | None = None
    selected_sources: dict | None = None
    frame_count: int = 0
    fps: float
    revision: int = 1
    parent_id: str | None = None
    diagnostics: list[str] = []


class FeedbackRequest(BaseModel):
    text: str


class FeedbackAccepted(BaseModel):
    job_id: str
    revision: int
