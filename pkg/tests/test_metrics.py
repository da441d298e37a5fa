import math

import pytest

from conftest import SequencedBackend
from splatfx.errors import ArgumentError, MetricError
from splatfx.metrics import QUESTION, AlignmentScore, vqascore
from splatfx.pipeline import ModelTransport

FRAMES = [b"\x89PNG-1", b"\x89PNG-2", b"\x89PNG-3"]


def live(backend):
    return ModelTransport("live", backend=backend, model="test-model")


def test_logprob_normalization_oracle():
    # p(Yes)=0.8, p(No)=0.2 under any shared normalizer
    shift = -1.3
    backend = SequencedBackend([
        {"content": "Yes",
         "logprobs": {"Yes": math.log(0.8) + shift, "No": math.log(0.2) + shift}}])
    score = vqascore(FRAMES, "the vase rises", live(backend))
    assert score.method == "vqascore"
    assert score.probability == pytest.approx(0.8, abs=1e-6)


def test_always_yes_saturates():
    backend = SequencedBackend([
        {"content": "Yes", "logprobs": {"Yes": 0.0, "No": -50.0}}])
    score = vqascore(FRAMES, "p", live(backend))
    assert score.probability == pytest.approx(1.0, abs=1e-6)


def test_case_insensitive_token_match():
    backend = SequencedBackend([
        {"content": "yes", "logprobs": {" yes": math.log(0.6),
                                        "NO": math.log(0.4),
                                        ",": -9.0}}])
    score = vqascore(FRAMES, "p", live(backend))
    assert score.probability == pytest.approx(0.6, abs=1e-6)


def test_missing_alternative_counts_as_zero():
    backend = SequencedBackend([
        {"content": "Yes", "logprobs": {"Yes": math.log(0.7)}}])
    assert vqascore(FRAMES, "p", live(backend)).probability == \
        pytest.approx(1.0, abs=1e-6)


def test_estimate_fallback_without_logprobs():
    backend = SequencedBackend(["Sure!", "I'd say 0.73 or so"])
    score = vqascore(FRAMES, "p", live(backend))
    assert score.method == "estimate"
    assert score.probability == pytest.approx(0.73)
    assert len(backend.requests) == 2
    assert backend.requests[0]["logprobs"] is True


def test_unusable_logprobs_fall_back():
    backend = SequencedBackend([
        {"content": "Hmm", "logprobs": {"Maybe": -0.1}}, "0.5"])
    score = vqascore(FRAMES, "p", live(backend))
    assert score.method == "estimate"
    assert score.probability == 0.5


def test_unparseable_estimate_raises():
    backend = SequencedBackend(["words", "more words, no number"])
    with pytest.raises(MetricError):
        vqascore(FRAMES, "p", live(backend))


def test_requires_two_frames():
    with pytest.raises(ArgumentError):
        vqascore([b"only-one"], "p", live(SequencedBackend([])))


def test_question_carries_prompt():
    backend = SequencedBackend([
        {"content": "Yes", "logprobs": {"Yes": 0.0, "No": -2.0}}])
    vqascore(FRAMES, "the teapot spins", live(backend))
    question = QUESTION.format(prompt="the teapot spins")
    request = backend.requests[0]
    texts = [p["text"] for m in request["messages"]
             if isinstance(m["content"], list)
             for p in m["content"] if p["type"] == "text"]
    assert question in texts
    # every frame rides along as an image part
    images = [p for m in request["messages"] if isinstance(m["content"], list)
              for p in m["content"] if p["type"] == "image_png_b64"]
    assert len(images) == len(FRAMES)


def test_alignment_score_is_frozen():
    s = AlignmentScore(probability=0.5, method="vqascore", raw_response="Yes")
    with pytest.raises(Exception):
        s.probability = 0.9
