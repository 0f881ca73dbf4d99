from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def ball_points(rng, count, n=2, radius=1.0, center=None):
    """Uniform samples of a closed ball in C^n."""
    x = rng.standard_normal((count, 2 * n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= radius * rng.uniform(0, 1, (count, 1)) ** (1 / (2 * n))
    z = x[:, :n] + 1j * x[:, n:]
    return z if center is None else z + np.asarray(center, dtype=complex)
