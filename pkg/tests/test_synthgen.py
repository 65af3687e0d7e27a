from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from sempipe import (
    ParticleClass,
    SynthConfig,
    connected_components,
    generate_dataset,
    generate_sample,
    rasterize,
    shape_metrics,
)
from sempipe.dataset import read_index
from sempipe.enhance import BinaryMask
from sempipe.errors import InvalidConfig
from sempipe.synthgen import generate_filter_background, pore_grid_mask

CLEAN = SynthConfig(
    image_side=256, pitch=40, pore_side=20,
    illumination_gradient=0, noise_sigma=0, seed=5,
)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        SynthConfig(pitch=20, pore_side=20)
    with pytest.raises(InvalidConfig):
        SynthConfig(particle_level_range=(200, 100))
    with pytest.raises(InvalidConfig):
        SynthConfig(fiber_fraction=1.5)
    with pytest.raises(InvalidConfig):
        SynthConfig(background_level=300)


def test_clean_background_is_two_level():
    img = generate_filter_background(CLEAN)
    values = set(np.unique(img.pixels))
    assert values == {CLEAN.pore_level, CLEAN.background_level}


def test_full_pores_have_exact_area():
    img = generate_filter_background(CLEAN)
    pores = BinaryMask(img.pixels == CLEAN.pore_level)
    labeling = connected_components(pores)
    interior = [s for s in labeling.sizes if s == max(labeling.sizes)]
    assert max(labeling.sizes) == CLEAN.pore_side**2
    assert len(interior) >= 25  # plenty of full pores on a 256px canvas


def test_background_determinism():
    noisy = replace(CLEAN, noise_sigma=6.0, illumination_gradient=40.0)
    a = generate_filter_background(noisy)
    b = generate_filter_background(noisy)
    assert a == b


def test_skewed_pore_count_close_to_straight():
    straight = pore_grid_mask(CLEAN)
    skewed = pore_grid_mask(replace(CLEAN, skew_deg=10.0))
    n_straight = connected_components(BinaryMask(straight)).count
    n_skewed = connected_components(BinaryMask(skewed)).count
    perimeter_pores = 4 * CLEAN.image_side / CLEAN.pitch
    assert abs(n_skewed - n_straight) <= perimeter_pores


def test_no_particles_means_pure_background():
    sample = generate_sample(CLEAN)
    assert sample.annotations == []
    assert sample.image == generate_filter_background(CLEAN)


def test_particles_disjoint_and_counted():
    cfg = replace(CLEAN, n_particles=5, particle_diameter_range=(25.0, 45.0))
    sample = generate_sample(cfg)
    assert len(sample.annotations) == 5
    assert all(c is ParticleClass.PARTICLE for c in sample.true_classes)
    union = np.zeros((256, 256), dtype=bool)
    for a in sample.annotations:
        mask = rasterize(a.polygon, 256, 256).bits
        assert mask.any()
        assert not (mask & union).any()
        union |= mask


def test_fiber_is_elongated():
    cfg = replace(
        CLEAN,
        n_particles=1,
        fiber_fraction=1.0,
        fiber_length_range=(120.0, 120.0),
        fiber_thickness_range=(8.0, 8.0),
    )
    sample = generate_sample(cfg)
    assert sample.true_classes == [ParticleClass.FIBER]
    m = shape_metrics(sample.annotations[0].polygon, 256, 256)
    assert m.elongation >= 3.0


def test_polygons_normalized_in_unit_square():
    cfg = replace(CLEAN, n_particles=6, fiber_fraction=0.5, seed=21)
    sample = generate_sample(cfg)
    for a in sample.annotations:
        for x, y in a.polygon.vertices:
            assert 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0


def test_sample_determinism():
    cfg = replace(CLEAN, n_particles=4, noise_sigma=6.0)
    a = generate_sample(cfg)
    b = generate_sample(cfg)
    assert a.image == b.image
    assert a.annotations == b.annotations


def test_true_pore_matches_config():
    assert CLEAN.true_pore.pore_side_px == pytest.approx(20.0)
    assert CLEAN.true_pore.pore_area_px == pytest.approx(400.0)


def test_generate_dataset_tree(tmp_path):
    cfg = replace(CLEAN, n_particles=2)
    index_path = generate_dataset(cfg, 4, tmp_path / "d")
    entries = read_index(index_path)
    assert len(entries) == 4
    assert len({e.filter_type for e in entries}) == 4  # one image per stratum
    for e in entries:
        assert Path(e.image_path).exists()
        assert Path(e.label_path).exists()


def test_generate_dataset_regeneration_identical(tmp_path):
    cfg = replace(CLEAN, n_particles=2, noise_sigma=6.0)
    generate_dataset(cfg, 3, tmp_path / "a")
    generate_dataset(cfg, 3, tmp_path / "b")
    for p in sorted((tmp_path / "a").rglob("*")):
        if p.is_file():
            twin = tmp_path / "b" / p.relative_to(tmp_path / "a")
            assert p.read_bytes().replace(b"/a/", b"/b/") == twin.read_bytes()


def test_generate_dataset_parallel_identical(tmp_path):
    cfg = replace(CLEAN, n_particles=2, noise_sigma=6.0)
    generate_dataset(cfg, 4, tmp_path / "s", jobs=1)
    generate_dataset(cfg, 4, tmp_path / "p", jobs=4)
    for p in sorted((tmp_path / "s").rglob("*")):
        if p.is_file():
            twin = tmp_path / "p" / p.relative_to(tmp_path / "s")
            assert p.read_bytes().replace(b"/s/", b"/p/") == twin.read_bytes()


def test_stratum_cycle_counts(tmp_path):
    cfg = replace(CLEAN, image_side=128, pitch=32, pore_side=16)
    index_path = generate_dataset(cfg, 8, tmp_path / "c")
    entries = read_index(index_path)
    counts = {}
    for e in entries:
        counts[e.filter_type] = counts.get(e.filter_type, 0) + 1
    assert sorted(counts.values()) == [2, 2, 2, 2]
