"""Timelines, phase plans, and per-frame scene states.

Fields are functions of absolute time, so every frame is computed
independently: scrubbing, seeking, and looping need no simulation state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadIntervalError, PhaseGapError, PhaseOverlapError
from .field_lang.program import BatchResult, FieldProgram, eval_batch_arrays
from .splat_io import Scene, SelectionMask

PHASE_TOL = 1e-9
MIN_DURATION = 0.5
MAX_DURATION = 30.0
DEFAULT_FPS = 30.0


@dataclass(frozen=True)
class Phase:
    name: str
    t_start: float
    t_end: float
    description: str = ""


@dataclass(frozen=True)
class PhasePlan:
    phases: tuple
    total_duration: float

    @classmethod
    def of(cls, entries, total_duration: float) -> "PhasePlan":
        phases = tuple(
            e if isinstance(e, Phase) else Phase(*e) for e in entries)
        return cls(phases=phases, total_duration=float(total_duration))


def clamp_duration(t: float) -> float:
    return float(min(MAX_DURATION, max(MIN_DURATION, t)))


def validate_phases(plan: PhasePlan) -> None:
    """Accept exactly the plans whose phases tile [0, total_duration]."""
    if not plan.phases:
        raise BadIntervalError("phase plan is empty")
    for ph in plan.phases:
        if not (ph.t_start < ph.t_end):
            raise BadIntervalError(
                f"phase {ph.name!r}: start {ph.t_start} is not before end {ph.t_end}")
    first = plan.phases[0]
    if abs(first.t_start) > PHASE_TOL:
        raise PhaseGapError(0.0, first.t_start)
    for prev, nxt in zip(plan.phases, plan.phases[1:]):
        delta = nxt.t_start - prev.t_end
        if delta > PHASE_TOL:
            raise PhaseGapError(prev.t_end, nxt.t_start)
        if delta < -PHASE_TOL:
            raise PhaseOverlapError(prev.t_end, nxt.t_start)
    last = plan.phases[-1]
    if abs(last.t_end - plan.total_duration) > PHASE_TOL:
        if last.t_end < plan.total_duration:
            raise PhaseGapError(last.t_end, plan.total_duration)
        raise PhaseOverlapError(plan.total_duration, last.t_end)


@dataclass(frozen=True)
class Timeline:
    duration: float
    fps: float = DEFAULT_FPS

    def __post_init__(self):
        if not (self.fps > 0):
            raise BadIntervalError(f"fps must be positive, got {self.fps}")
        if not (self.duration >= 0):
            raise BadIntervalError(f"duration must be non-negative, got {self.duration}")

    @property
    def times(self) -> np.ndarray:
        # includes t = duration exactly when duration*fps is integral
        k = int(np.floor(self.duration * self.fps))
        return np.arange(k + 1, dtype=np.float64) / self.fps

    def __len__(self) -> int:
        return int(np.floor(self.duration * self.fps)) + 1


@dataclass
class SceneState:
    """One animated moment: masked splats carry new attributes, the rest
    of the scene is implicitly unchanged."""

    base: Scene
    mask: SelectionMask
    batch: BatchResult
    t: float

    @property
    def states(self) -> list:
        return [self.batch.state(k) for k in range(len(self.batch))]


def apply_field(scene: Scene, mask: SelectionMask, program: FieldProgram,
                t: float) -> SceneState:
    """Evaluate the field over the selection at absolute time t."""
    return SceneState(base=scene, mask=mask,
                      batch=eval_batch_arrays(program, scene, mask, t), t=t)


def sample_animation(scene: Scene, mask: SelectionMask, program: FieldProgram,
                     timeline: Timeline) -> list[SceneState]:
    """One SceneState per timeline tick; frames are mutually independent."""
    return [apply_field(scene, mask, program, float(t)) for t in timeline.times]
