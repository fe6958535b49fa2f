import os
import sys
from pathlib import Path

import numpy as np
import pytest

service_dir = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
backend_dir = os.path.abspath(os.path.join(service_dir, '..'))
for path in (service_dir, backend_dir):
    if path not in sys.path:
        sys.path.insert(0, path)

from app.schemas.image import GrayImage  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "golden"


def synthetic_image(seed: int, size: int = 96) -> GrayImage:
    """Smooth shading, oriented texture, a few hard-edged shapes and fine grain."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    fx, fy = rng.uniform(0.15, 0.45, size=2)
    base = 110 + 40 * np.sin(fx * xx + 0.3 * yy) * np.cos(fy * yy)
    base += 0.25 * (xx - size / 2)
    for _ in range(4):
        cx, cy = rng.uniform(0, size, size=2)
        radius = rng.uniform(size / 12, size / 5)
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 < radius ** 2
        base[mask] += rng.uniform(-60, 60)
    x0, y0 = rng.integers(0, size // 2, size=2)
    base[y0:y0 + size // 3, x0:x0 + size // 4] -= 45
    base += rng.normal(0.0, 6.0, size=base.shape)
    return GrayImage(pixels=np.clip(base, 0.0, 255.0))


@pytest.fixture
def textured_image() -> GrayImage:
    return synthetic_image(7)


@pytest.fixture
def test_images():
    return [synthetic_image(seed) for seed in (11, 23, 42)]


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN_DIR
