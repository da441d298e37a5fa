"""Text-video alignment scoring.

The metric asks a vision-language model whether the rendered animation
matches the prompt and reports the probability of "Yes".  When the
transport exposes token log-probabilities the probability is computed by
normalizing p(Yes) against p(Yes)+p(No); otherwise the model is asked for
a calibrated estimate directly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import ArgumentError, MetricError
from .pipeline.transport import ModelTransport, image_message, text_message

QUESTION = 'Does this video align with the described animation: "{prompt}"?'

_FLOAT_RE = re.compile(r"[01](?:\.\d+)?")


@dataclass(frozen=True)
class AlignmentScore:
    probability: float
    method: str       # "vqascore" (logprob-normalized) or "estimate"
    raw_response: str


def _normalize_yes(logprobs: dict) -> float | None:
    def lookup(word):
        best = None
        for token, lp in logprobs.items():
            if token.strip().lower() == word:
                best = lp if best is None else max(best, lp)
        return best

    lp_yes, lp_no = lookup("yes"), lookup("no")
    if lp_yes is None and lp_no is None:
        return None
    # a missing alternative is treated as vanishingly unlikely
    p_yes = math.exp(lp_yes) if lp_yes is not None else 0.0
    p_no = math.exp(lp_no) if lp_no is not None else 0.0
    if p_yes + p_no == 0.0:
        return None
    return p_yes / (p_yes + p_no)


def vqascore(frames: list[bytes], prompt: str,
             transport: ModelTransport) -> AlignmentScore:
    """Probability that the model answers Yes to the alignment question."""
    if len(frames) < 2:
        raise ArgumentError("vqascore needs at least 2 frames")
    question = QUESTION.format(prompt=prompt)
    system = ("You judge whether an animation, shown as frames in time order, "
              "matches a description. Answer with exactly Yes or No.")
    messages = [text_message("system", system),
                image_message("user", question, frames)]
    request = transport.build_request(messages, logprobs=True)
    response = transport.send(request)

    if response.get("logprobs"):
        p = _normalize_yes(response["logprobs"])
        if p is not None:
            return AlignmentScore(probability=p, method="vqascore",
                                  raw_response=response["content"])

    # no usable logprobs: ask for a calibrated numeric estimate instead
    messages = [
        text_message("system",
                     "You judge whether an animation, shown as frames in time "
                     "order, matches a description. Reply with a single "
                     "probability between 0 and 1."),
        image_message("user", question, frames)]
    response = transport.send(transport.build_request(messages))
    m = _FLOAT_RE.search(response["content"])
    if not m:
        raise MetricError(f"unparseable probability: {response['content']!r}")
    p = min(1.0, max(0.0, float(m.group(0))))
    return AlignmentScore(probability=p, method="estimate",
                          raw_response=response["content"])
