"""The five pipeline stages, each a thin protocol around the transport.

Every stage builds messages from the versioned templates, sends them, and
parses the reply strictly; parse failures append a corrective follow-up
turn (so retries are distinct exchanges that record/replay cleanly) before
giving up with a StageError.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

import numpy as np

from ..animation import Phase, PhasePlan, clamp_duration, validate_phases
from ..errors import (ArgumentError, ParseError, FieldTypeError, SplatfxError,
                      StageError)
from ..field_lang import GRAMMAR_HELP, SCALAR, VEC3, FieldProgram, parse, typecheck
from .templates import render
from .transport import ModelTransport, image_message, request_hash, text_message

log = logging.getLogger(__name__)

MAX_RETRIES = 2        # format retries for plain-text stages
MAX_REPAIRS = 3        # diagnostic-driven repair rounds for generated code
MAX_HYPOTHESES = 16

ATTRS = ("centers", "rgbs", "opacities")
ATTR_KEY = {"centers": "position", "rgbs": "color", "opacities": "alpha"}
ATTR_TYPE = {"centers": VEC3, "rgbs": VEC3, "opacities": SCALAR}

_PHASE_RE = re.compile(
    r"Phase\s+\d+\s*\(\s*([0-9.]+)\s*-\s*([0-9.]+)\s*s\s*\)\s*:\s*(.+)")
_FENCE_RE = re.compile(r"```(?:[a-z]*\n)?(.*?)```", re.DOTALL)
_INT_RE = re.compile(r"-?\d+")


@dataclass
class Hypothesis:
    program: FieldProgram
    score: float | None = None
    frame_paths: list = field(default_factory=list)


@dataclass
class HypothesisSet:
    candidates: list

    @property
    def m(self) -> int:
        return len(self.candidates)


def _call(transport: ModelTransport, messages, *, stage: str,
          temperature: float = 0.0, logprobs: bool = False,
          transcript: list | None = None) -> dict:
    request = transport.build_request(messages, temperature=temperature,
                                      logprobs=logprobs)
    response = transport.send(request)
    if transcript is not None:
        transcript.append({"stage": stage, "hash": request_hash(request)})
    return response


def phases_text(plan: PhasePlan) -> str:
    return "\n".join(
        f"Phase {k + 1} ({ph.t_start:g}-{ph.t_end:g}s): {ph.description or ph.name}"
        for k, ph in enumerate(plan.phases))


def _parse_phase_plan(content: str) -> PhasePlan | None:
    entries = []
    for m in _PHASE_RE.finditer(content):
        t0, t1, desc = float(m.group(1)), float(m.group(2)), m.group(3).strip()
        entries.append(Phase(name=desc, t_start=t0, t_end=t1, description=desc))
    if not entries:
        return None
    entries.sort(key=lambda p: p.t_start)
    # repair small gaps/overlaps by snapping to the previous boundary
    repaired = []
    cursor = 0.0
    for ph in entries:
        start = cursor if abs(ph.t_start - cursor) <= 0.5 else ph.t_start
        if start >= ph.t_end:
            return None
        repaired.append(Phase(ph.name, start, ph.t_end, ph.description))
        cursor = ph.t_end
    total = clamp_duration(repaired[-1].t_end)
    if total != repaired[-1].t_end:
        scale = total / repaired[-1].t_end
        repaired = [Phase(p.name, p.t_start * scale, p.t_end * scale, p.description)
                    for p in repaired]
    plan = PhasePlan(phases=tuple(repaired), total_duration=total)
    try:
        validate_phases(plan)
    except SplatfxError:
        return None
    return plan


def design_phase(transport: ModelTransport, user_prompt: str, *,
                 bbox_text: str = "unknown", duration_hint: float = 3.0,
                 snapshots: list | None = None,
                 transcript: list | None = None) -> PhasePlan:
    """Break the prompt into an ordered tiling of timed phases."""
    if not user_prompt.strip():
        raise ArgumentError("empty animation prompt")
    system = render("abstract_summary", prompt=user_prompt,
                    duration=f"{duration_hint:g}", bbox=bbox_text)
    if snapshots:
        user = image_message("user", "Break the animation into phases now.", snapshots)
    else:
        user = text_message("user", "Break the animation into phases now.")
    messages = [text_message("system", system), user]
    for _ in range(MAX_RETRIES + 1):
        response = _call(transport, messages, stage="design", transcript=transcript)
        plan = _parse_phase_plan(response["content"])
        if plan is not None:
            return plan
        messages = messages + [
            {"role": "assistant", "content": response["content"]},
            text_message("user", "That was not a valid contiguous phase list. "
                                 "Reply only with 'Phase k (a-bs): action' lines "
                                 "starting at 0s.")]
    raise StageError("design", "no parseable phase plan after retries")


def derive_behaviors(transport: ModelTransport, plan: PhasePlan,
                     user_prompt: str,
                     transcript: list | None = None) -> dict:
    """One natural-language behavior spec per attribute family."""
    behaviors = {}
    ptext = phases_text(plan)
    for attr in ATTRS:
        system = render(f"{attr}_behavior", prompt=user_prompt, phases=ptext)
        messages = [text_message("system", system),
                    text_message("user", "Describe the behavior now.")]
        for _ in range(MAX_RETRIES + 1):
            response = _call(transport, messages, stage=f"behavior_{attr}",
                             transcript=transcript)
            text = response["content"].strip()
            if text:
                behaviors[attr] = text
                break
            messages = messages + [
                {"role": "assistant", "content": response["content"]},
                text_message("user", "Reply with a non-empty behavior description.")]
        else:
            raise StageError("behavior", f"no usable {attr} behavior after retries")
    return behaviors


def _strip_fence(content: str) -> str:
    m = _FENCE_RE.search(content)
    return (m.group(1) if m else content).strip()


def _generate_source(transport, attr: str, behaviors, plan, temperature,
                     transcript) -> str:
    system = render(f"code_{attr}", behavior=behaviors[attr],
                    phases=phases_text(plan), duration=f"{plan.total_duration:g}",
                    grammar=GRAMMAR_HELP)
    messages = [text_message("system", system),
                text_message("user", "Write the program now.")]
    last_diag = ""
    for _ in range(MAX_REPAIRS + 1):
        response = _call(transport, messages, stage=f"codegen_{attr}",
                         temperature=temperature, transcript=transcript)
        source = _strip_fence(response["content"])
        try:
            typecheck(parse(source), ATTR_TYPE[attr])
            return source
        except (ParseError, FieldTypeError) as e:
            last_diag = str(e)
            messages = messages + [
                {"role": "assistant", "content": response["content"]},
                text_message("user", f"That program is invalid: {last_diag}. "
                                     "Reply with a corrected program only.")]
    raise StageError("codegen", f"{attr}: {last_diag}")


def generate_program(transport: ModelTransport, behaviors: dict, plan: PhasePlan,
                     seed: int = 0, temperature: float = 0.0,
                     transcript: list | None = None) -> FieldProgram:
    """Three validated field-language sources, with diagnostic repair."""
    sources = {attr: _generate_source(transport, attr, behaviors, plan,
                                      temperature, transcript)
               for attr in ATTRS}
    return FieldProgram.from_sources(
        position=sources["centers"], color=sources["rgbs"],
        alpha=sources["opacities"], duration=plan.total_duration, seed=seed)


def sample_hypotheses(transport: ModelTransport, behaviors: dict, plan: PhasePlan,
                      m: int, *, seed: int = 0, temperature_base: float = 0.7,
                      temperature_step: float = 0.1,
                      transcript: list | None = None) -> HypothesisSet:
    """m candidate programs, diversity induced by temperature jitter."""
    if m < 1:
        raise ArgumentError(f"hypothesis count must be >= 1, got {m}")
    if m > MAX_HYPOTHESES:
        raise ArgumentError(f"hypothesis count must be <= {MAX_HYPOTHESES}, got {m}")
    candidates = []
    seen = set()
    for j in range(m):
        temp = temperature_base + j * temperature_step
        program = generate_program(transport, behaviors, plan, seed=seed + j,
                                   temperature=temp, transcript=transcript)
        key = tuple(program.source_text[k] for k in ("position", "color", "alpha"))
        if key in seen:
            # one regeneration attempt at an off-grid temperature, then keep
            program = generate_program(
                transport, behaviors, plan, seed=seed + j,
                temperature=temp + temperature_step * (m + 1),
                transcript=transcript)
            key = tuple(program.source_text[k] for k in ("position", "color", "alpha"))
        seen.add(key)
        candidates.append(Hypothesis(program=program))
    return HypothesisSet(candidates=candidates)


def score_hypothesis(transport: ModelTransport, frames: list[bytes],
                     user_prompt: str,
                     transcript: list | None = None) -> int:
    """VLM score in [0,100]; scoring hiccups degrade to 0, never raise."""
    if not frames:
        raise ArgumentError("scoring requires at least one frame")
    system = render("score_animation", prompt=user_prompt)
    messages = [text_message("system", system),
                image_message("user", "Rate the animation now.", frames)]
    for _ in range(MAX_RETRIES + 1):
        response = _call(transport, messages, stage="score", transcript=transcript)
        m = _INT_RE.search(response["content"])
        if m:
            value = int(m.group(0))
            if value < 0 or value > 100:
                log.warning("score %d out of range, clamping", value)
            return max(0, min(100, value))
        messages = messages + [
            {"role": "assistant", "content": response["content"]},
            text_message("user", "Reply with a single integer between 0 and 100.")]
    log.warning("unparseable score after retries; treating as 0")
    return 0


def best_index(scores: list[float]) -> int:
    """Argmax with ties resolved to the lowest index."""
    best = 0
    for k, s in enumerate(scores):
        if s > scores[best]:
            best = k
    return best


def select_best(hset: HypothesisSet) -> FieldProgram:
    if any(c.score is None for c in hset.candidates):
        raise ArgumentError("select_best requires every candidate to be scored")
    return hset.candidates[best_index([c.score for c in hset.candidates])].program


def _refine_sources(transport, program: FieldProgram, frames, user_prompt, *,
                    template_prefix: str, user_template_id: str,
                    user_slots: dict, transcript) -> FieldProgram:
    """Shared body of auto and conversational refinement: one model pass
    per attribute, invalid output keeps the prior source."""
    key_to_attr = {"position": "centers", "color": "rgbs", "alpha": "opacities"}
    sources = dict(program.source_text)
    changed = False
    for key, attr in key_to_attr.items():
        system = render(f"{template_prefix}_{attr}", prompt=user_prompt,
                        grammar=GRAMMAR_HELP)
        user_text = render(user_template_id, source=sources[key], **user_slots)
        messages = [text_message("system", system),
                    image_message("user", user_text, frames)]
        new_source = None
        last_diag = ""
        for _ in range(MAX_REPAIRS):
            response = _call(transport, messages, stage=f"{template_prefix}_{attr}",
                             transcript=transcript)
            candidate = _strip_fence(response["content"])
            try:
                typecheck(parse(candidate), ATTR_TYPE[attr])
                new_source = candidate
                break
            except (ParseError, FieldTypeError) as e:
                last_diag = str(e)
                messages = messages + [
                    {"role": "assistant", "content": response["content"]},
                    text_message("user", f"That program is invalid: {last_diag}. "
                                         "Reply with a corrected program only.")]
        if new_source is None:
            log.warning("%s %s: keeping prior source (%s)",
                        template_prefix, attr, last_diag)
        elif new_source != sources[key]:
            sources[key] = new_source
            changed = True
    if not changed:
        return program
    return FieldProgram.from_sources(
        position=sources["position"], color=sources["color"],
        alpha=sources["alpha"], duration=program.duration, seed=program.seed)


def auto_refine(transport: ModelTransport, program: FieldProgram,
                frames: list[bytes], user_prompt: str, rounds: int, *,
                plan: PhasePlan, transcript: list | None = None) -> FieldProgram:
    """Up to `rounds` VLM-driven improvement passes; failures keep the
    prior program."""
    for _ in range(max(0, rounds)):
        program = _refine_sources(
            transport, program, frames, user_prompt,
            template_prefix="auto_improve", user_template_id="auto_improve_user",
            user_slots={"phases": phases_text(plan)}, transcript=transcript)
    return program


def feedback_refine(transport: ModelTransport, program: FieldProgram,
                    frames: list[bytes], user_prompt: str, feedback: str,
                    transcript: list | None = None) -> FieldProgram:
    """One conversational refinement step from open-text user feedback."""
    if not feedback.strip():
        raise ArgumentError("empty feedback")
    return _refine_sources(
        transport, program, frames, user_prompt,
        template_prefix="feedback", user_template_id="feedback_user",
        user_slots={"feedback": feedback}, transcript=transcript)


def mock_score(frames: list[np.ndarray]) -> float:
    """Heuristic motion proxy for selection-logic tests only: mean
    inter-frame pixel difference mapped onto [0,100]."""
    if len(frames) < 2:
        return 0.0
    diffs = [np.mean(np.abs(a.astype(np.float64) - b.astype(np.float64)))
             for a, b in zip(frames, frames[1:])]
    return float(min(100.0, 100.0 * np.mean(diffs) / 25.5))
