import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from curvadion import problems as pb


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def noisy_quadratic():
    A = pb.spd_from_spectrum(np.linspace(0.1, 1.0, 48), seed=0)
    return pb.quadratic_problem(A, noise_sigma=0.01, shape=(8, 6))


@pytest.fixture
def clean_quadratic():
    A = pb.spd_from_spectrum(np.linspace(0.1, 1.0, 48), seed=0)
    return pb.quadratic_problem(A, shape=(8, 6))


@pytest.fixture
def switch_problem():
    spec = pb.CurvatureSwitchSpec.default(12, [40, 80, 120, 160], seed=0)
    return pb.curvature_switch_problem(spec, noise_sigma=0.01, shape=(4, 3))
