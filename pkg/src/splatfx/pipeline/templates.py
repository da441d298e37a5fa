"""Prompt templates, loaded from versioned data files."""

from __future__ import annotations

import string
from importlib import resources

TEMPLATE_IDS = [
    "abstract_summary",
    "centers_behavior", "rgbs_behavior", "opacities_behavior",
    "code_centers", "code_rgbs", "code_opacities",
    "auto_improve_centers", "auto_improve_rgbs", "auto_improve_opacities",
    "feedback_centers", "feedback_rgbs", "feedback_opacities",
    "score_animation",
    "auto_improve_user", "feedback_user",
]

REQUIRED_SLOTS = {
    "abstract_summary": {"prompt", "duration", "bbox"},
    "centers_behavior": {"prompt", "phases"},
    "rgbs_behavior": {"prompt", "phases"},
    "opacities_behavior": {"prompt", "phases"},
    "code_centers": {"behavior", "phases", "duration", "grammar"},
    "code_rgbs": {"behavior", "phases", "duration", "grammar"},
    "code_opacities": {"behavior", "phases", "duration", "grammar"},
    "auto_improve_centers": {"prompt", "grammar"},
    "auto_improve_rgbs": {"prompt", "grammar"},
    "auto_improve_opacities": {"prompt", "grammar"},
    "feedback_centers": {"prompt", "grammar"},
    "feedback_rgbs": {"prompt", "grammar"},
    "feedback_opacities": {"prompt", "grammar"},
    "score_animation": {"prompt"},
    "auto_improve_user": {"source", "phases"},
    "feedback_user": {"source", "feedback"},
}

_cache: dict[str, str] = {}


def template_text(template_id: str) -> str:
    if template_id not in _cache:
        if template_id not in TEMPLATE_IDS:
            raise KeyError(f"unknown template {template_id!r}")
        text = (resources.files("splatfx.pipeline") / "templates"
                / f"{template_id}.txt").read_text()
        slots = {name for _, name, _, _ in string.Formatter().parse(text) if name}
        missing = REQUIRED_SLOTS[template_id] - slots
        if missing:
            raise ValueError(f"template {template_id} is missing slots {missing}")
        _cache[template_id] = text
    return _cache[template_id]


def render(template_id: str, **slots) -> str:
    return template_text(template_id).format(**slots)
