import math
from collections import Counter, deque

import numpy as np
import pytest

from sempipe import (
    BinaryMask,
    GrayImage,
    SynthConfig,
    connected_components,
    estimate_pore_size,
    generate_sample,
)
from sempipe.errors import DegenerateImage, InvalidConfig, NoPoresFound
from sempipe.porometry import PoreEstimate


def flood_fill_components(bits: np.ndarray, connectivity: int) -> list[int]:
    """Independent BFS oracle; returns the component size multiset."""
    h, w = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    if connectivity == 4:
        nbrs = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        nbrs = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]
    sizes = []
    for y in range(h):
        for x in range(w):
            if not bits[y, x] or seen[y, x]:
                continue
            size = 0
            queue = deque([(y, x)])
            seen[y, x] = True
            while queue:
                cy, cx = queue.popleft()
                size += 1
                for dy, dx in nbrs:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and bits[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            sizes.append(size)
    return sizes


def test_empty_mask():
    lab = connected_components(BinaryMask(np.zeros((5, 5), dtype=bool)))
    assert lab.count == 0 and lab.sizes == []


def test_full_mask():
    lab = connected_components(BinaryMask(np.ones((5, 7), dtype=bool)))
    assert lab.count == 1 and lab.sizes == [35]


def test_diagonal_connectivity():
    bits = np.zeros((3, 3), dtype=bool)
    bits[0, 0] = bits[1, 1] = True
    assert connected_components(BinaryMask(bits), 4).count == 2
    assert connected_components(BinaryMask(bits), 8).count == 1


def test_bad_connectivity():
    with pytest.raises(InvalidConfig):
        connected_components(BinaryMask(np.zeros((2, 2), dtype=bool)), 6)


def test_raster_scan_label_order(rng):
    bits = rng.random((20, 20)) < 0.4
    lab = connected_components(BinaryMask(bits), 4)
    seen = []
    for v in lab.labels.ravel():
        if v and v not in seen:
            seen.append(int(v))
    assert seen == list(range(1, lab.count + 1))
    assert sum(lab.sizes) == int(bits.sum())


@pytest.mark.parametrize("connectivity", [4, 8])
def test_components_match_flood_fill_oracle(rng, connectivity):
    for _ in range(40):
        bits = rng.random((24, 24)) < rng.uniform(0.2, 0.7)
        lab = connected_components(BinaryMask(bits), connectivity)
        oracle = flood_fill_components(bits, connectivity)
        assert lab.count == len(oracle)
        assert Counter(lab.sizes) == Counter(oracle)


def test_single_component_mode_is_itself():
    px = np.full((32, 32), 200, dtype=np.uint8)
    px[5:15, 5:15] = 10  # one dark 100-px pore
    est = estimate_pore_size(GrayImage(px), (50, 200))
    assert est.pore_area_px == 100
    assert est.pore_side_px == 10
    assert est.pore_diagonal_px == pytest.approx(14.142, abs=1e-3)
    assert est.contributing_components == 1


def test_diagonal_is_sqrt2_of_side():
    est = PoreEstimate.from_area(173.0)
    assert est.pore_diagonal_px == pytest.approx(est.pore_side_px * math.sqrt(2), rel=1e-9)


def test_degenerate_image():
    with pytest.raises(DegenerateImage):
        estimate_pore_size(GrayImage(np.full((16, 16), 9, dtype=np.uint8)))


def test_no_pores_in_bounds():
    px = np.full((32, 32), 200, dtype=np.uint8)
    px[5:15, 5:15] = 10
    with pytest.raises(NoPoresFound):
        estimate_pore_size(GrayImage(px), (500, 900))


def test_bad_bounds():
    px = np.full((32, 32), 200, dtype=np.uint8)
    px[5:15, 5:15] = 10
    with pytest.raises(InvalidConfig):
        estimate_pore_size(GrayImage(px), (200, 50))


def test_recovers_synthetic_grid_pore_size():
    cfg = SynthConfig(image_side=512, pitch=40, pore_side=20, skew_deg=0, seed=11)
    est = estimate_pore_size(generate_sample(cfg).image)
    assert est.pore_side_px == pytest.approx(20, abs=1.0)
    assert est.pore_diagonal_px == pytest.approx(28.28, abs=1.5)


def test_recovers_skewed_grid_pore_size():
    cfg = SynthConfig(image_side=512, pitch=40, pore_side=20, skew_deg=8, seed=12)
    est = estimate_pore_size(generate_sample(cfg).image)
    assert est.pore_side_px == pytest.approx(20, abs=1.5)


@pytest.mark.parametrize("pitch,pore_side", [(30, 15), (40, 20), (60, 30)])
@pytest.mark.parametrize("skew", [0, 5, 10])
def test_relative_error_across_grids(pitch, pore_side, skew):
    cfg = SynthConfig(image_side=384, pitch=pitch, pore_side=pore_side,
                      skew_deg=skew, seed=99)
    est = estimate_pore_size(generate_sample(cfg).image)
    assert abs(est.pore_side_px - pore_side) / pore_side <= 0.075
