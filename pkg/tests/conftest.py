import numpy as np
import pytest

from splatfx.splat_io import Scene, full_mask


def random_scene(rng, n, spread=1.0, scale=0.02):
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return Scene(
        positions=rng.normal(size=(n, 3)) * spread,
        rotations=q,
        scales=np.exp(rng.normal(size=(n, 3)) * 0.3 + np.log(scale)),
        sh_dc=rng.normal(size=(n, 3)) * 0.5,
        opacities=rng.uniform(0.05, 0.95, n),
        sh_rest=rng.normal(size=(n, 45)).astype(np.float64) * 0.1,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_scene(rng):
    return random_scene(rng, 50)


@pytest.fixture
def small_mask(small_scene):
    return full_mask(small_scene)


class SequencedBackend:
    """Live-mode test backend answering from a fixed response queue."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def __call__(self, request):
        self.requests.append(request)
        if not self.responses:
            raise AssertionError("backend ran out of scripted responses")
        item = self.responses.pop(0)
        if isinstance(item, str):
            return {"content": item, "logprobs": None}
        return item
