from .job import (AnimationJob, JobConfig, load_program, run_feedback_revision,
                  run_job, save_job, save_program)
from .scripted import CannedBackend
from .stages import (Hypothesis, HypothesisSet, auto_refine, best_index,
                     derive_behaviors, design_phase, feedback_refine,
                     generate_program, mock_score, sample_hypotheses,
                     score_hypothesis, select_best)
from .transport import (ModelTransport, TranscriptStore, image_message,
                        make_transport, request_hash, text_message)

__all__ = [
    "AnimationJob", "JobConfig", "run_job", "run_feedback_revision",
    "save_job", "save_program", "load_program",
    "CannedBackend",
    "Hypothesis", "HypothesisSet",
    "design_phase", "derive_behaviors", "generate_program",
    "sample_hypotheses", "score_hypothesis", "select_best", "best_index",
    "auto_refine", "feedback_refine", "mock_score",
    "ModelTransport", "TranscriptStore", "make_transport", "request_hash",
    "text_message", "image_message",
]
