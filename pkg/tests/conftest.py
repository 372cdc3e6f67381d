"""Shared fixtures: deterministic images, interpretable instances and the
planted synthetic ensemble used across the suite."""

import os

import numpy as np
import pytest

from blime import (
    InterpretableInstance,
    SyntheticEnsembleSpec,
    grid_segment,
    synthetic_predictor,
)

FIXTURES = os.path.join(os.path.dirname(__file__), os.pardir, "fixtures")

# Planted logit weights: component 7 dominant positive, component 3 dominant
# negative, middles close enough to be confusable at small N.
PLANTED_BETA = (0.5, -1.0, 1.5, -5.0, 2.0, -0.5, 0.0, 5.0)
DOMINANT = 7
LEAST = 3


def make_test_image(h=32, w=32, channels=3, seed=5):
    """Textured uint8 image where no grid cell is constant."""
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, size=(h, w, channels), dtype=np.uint8)
    return img


@pytest.fixture(scope="session")
def image():
    return make_test_image()


@pytest.fixture(scope="session")
def interp(image):
    return InterpretableInstance(image, grid_segment(image, 2, 4))


@pytest.fixture(scope="session")
def planted_spec():
    return SyntheticEnsembleSpec(
        member_count=5,
        base_weights=PLANTED_BETA,
        member_noise_scale=0.2,
        bias=0.0,
        seed=11,
    )


@pytest.fixture(scope="session")
def planted_predictor(planted_spec, interp):
    return synthetic_predictor(planted_spec, interp)


@pytest.fixture()
def fixtures_dir():
    return os.path.abspath(FIXTURES)
