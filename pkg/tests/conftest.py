import math

import numpy as np
import pytest

from sempipe import GrayImage, Polygon


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_gray(rng, shape=(32, 32), low=0, high=256):
    return GrayImage(rng.integers(low, high, shape).astype(np.uint8))


def rect_polygon(cx, cy, w, h, angle_deg, dims):
    """Axis-aligned w x h rectangle centered at (cx, cy), rotated, normalized."""
    width, height = dims
    theta = math.radians(angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    corners = []
    for dx, dy in ((-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)):
        x = cx + c * dx - s * dy
        y = cy + s * dx + c * dy
        corners.append((x / width, y / height))
    return Polygon(tuple(corners))
