"""Deterministic offline model backend.

Used to record fixture bundles and to exercise the pipeline without a
provider. Responses depend only on the request content, so record runs
are reproducible.
"""

from __future__ import annotations

import hashlib
import re

from .transport import canonical_json

_STAGE_RE = re.compile(r"\[stage:([a-z_]+)\]")
_FENCE_RE = re.compile(r"```(?:[a-z]*\n)?(.*?)```", re.DOTALL)


def _stage_of(request: dict) -> str:
    for msg in request["messages"]:
        content = msg["content"]
        text = content if isinstance(content, str) else " ".join(
            p.get("text", "") for p in content if p.get("type") == "text")
        m = _STAGE_RE.search(text)
        if m:
            return m.group(1)
    return ""


def _user_text(request: dict) -> str:
    parts = []
    for msg in request["messages"]:
        if msg["role"] != "user":
            continue
        content = msg["content"]
        if isinstance(content, str):
            parts.append(content)
        else:
            parts.extend(p.get("text", "") for p in content
                         if p.get("type") == "text")
    return "\n".join(parts)


def _all_text(request: dict) -> str:
    parts = []
    for msg in request["messages"]:
        content = msg["content"]
        if isinstance(content, str):
            parts.append(content)
        else:
            parts.extend(p.get("text", "") for p in content
                         if p.get("type") == "text")
    return "\n".join(parts)


def _current_source(request: dict) -> str:
    m = _FENCE_RE.search(_user_text(request))
    return m.group(1).strip() if m else "return p0"


class CannedBackend:
    """Scripted stand-in provider emitting the canonical raise-then-fade
    animation; variation index comes from the sampling temperature."""

    def __init__(self, temperature_base: float = 0.7, temperature_step: float = 0.1):
        self.temperature_base = temperature_base
        self.temperature_step = temperature_step

    def _variant(self, request: dict) -> int:
        return max(0, round((request.get("temperature", 0.0) - self.temperature_base)
                            / self.temperature_step))

    def __call__(self, request: dict) -> dict:
        stage = _stage_of(request)
        if not stage and "Answer with exactly Yes or No" in _all_text(request):
            # alignment question: confidently aligned
            return {"content": "Yes", "logprobs": {"Yes": 0.0, "No": -50.0}}
        if stage == "abstract_summary":
            content = ("Phase 1 (0-2s): translate the object upward\n"
                       "Phase 2 (2-3s): fade from opaque to transparent")
        elif stage == "centers_behavior":
            content = ("The centers translate upward along z by 2 scene units "
                       "during 0-2s, linearly, then hold still during 2-3s.")
        elif stage == "rgbs_behavior":
            content = "Colors stay unchanged for the whole animation."
        elif stage == "opacities_behavior":
            content = ("Opacity stays at its original value until t=2, then "
                       "fades linearly to 0 during 2-3s.")
        elif stage == "code_centers":
            content = "return p0 + vec3(0, 0, 2 * ramp(0, 2))"
        elif stage == "code_rgbs":
            # distinct-but-equivalent sources so hypothesis sets vary only
            # in provenance, never in the animation the winner produces
            content = f"let variant = {self._variant(request)};\nreturn c0"
        elif stage == "code_opacities":
            content = "return a0 * (1 - ramp(2, 3))"
        elif stage == "score_animation":
            digest = hashlib.sha256(canonical_json(request).encode()).digest()
            content = str(60 + digest[0] % 41)
        elif stage in ("auto_improve_centers", "auto_improve_rgbs",
                       "auto_improve_opacities"):
            content = _current_source(request)
        elif stage == "feedback_centers":
            content = "return p0 + vec3(0, 0, 2.2 * ramp(0, 1) * (1 + 0.1 * sin(6.28 * t)))"
        elif stage == "feedback_rgbs":
            content = "return c0"
        elif stage == "feedback_opacities":
            content = "return a0 * (1 - ramp(2, 2.5))"
        else:
            content = "OK"
        return {"content": content, "logprobs": None}
