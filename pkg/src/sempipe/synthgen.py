"""Synthetic SEM-filter image generator with exact ground truth.

Square pore grids with optional rotation, an illumination ramp, Gaussian
noise, and non-overlapping particle/fiber instances whose polygons are
emitted as ground-truth annotations. Everything is driven by the
deterministic SplitMix64 stream, so identical configs reproduce
bit-identical outputs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .annotations import (
    Annotation,
    ParticleClass,
    Polygon,
    rasterize,
    write_label_file,
)
from .dataset import DatasetEntry, FilterType, write_index
from .errors import InvalidConfig, IoFailure, PlacementFailure
from .image_core import GrayImage, save_image
from .porometry import PoreEstimate
from .rng import SplitMix64

_MAX_PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class SynthConfig:
    image_side: int = 1024
    pitch: float = 40.0
    pore_side: float = 20.0
    skew_deg: float = 0.0
    n_particles: int = 0
    particle_diameter_range: tuple[float, float] = (40.0, 90.0)
    fiber_fraction: float = 0.0
    fiber_length_range: tuple[float, float] = (100.0, 200.0)
    fiber_thickness_range: tuple[float, float] = (6.0, 12.0)
    illumination_gradient: float = 40.0
    noise_sigma: float = 6.0
    background_level: int = 180
    pore_level: int = 30
    particle_level_range: tuple[int, int] = (90, 130)
    seed: int = 0

    def __post_init__(self):
        if self.image_side < 8:
            raise InvalidConfig("image_side too small")
        if not (0 < self.pore_side < self.pitch):
            raise InvalidConfig("need 0 < pore_side < pitch")
        for rng in (
            self.particle_diameter_range,
            self.fiber_length_range,
            self.fiber_thickness_range,
            self.particle_level_range,
        ):
            if rng[0] > rng[1]:
                raise InvalidConfig(f"range {rng} has low > high")
        for level in (self.background_level, self.pore_level, *self.particle_level_range):
            if not (0 <= level <= 255):
                raise InvalidConfig("intensity levels must be in [0, 255]")
        if not (0.0 <= self.fiber_fraction <= 1.0):
            raise InvalidConfig("fiber_fraction must be in [0, 1]")
        if self.n_particles < 0:
            raise InvalidConfig("n_particles must be non-negative")

    @property
    def true_pore(self) -> PoreEstimate:
        return PoreEstimate.from_area(self.pore_side**2)


@dataclass(frozen=True)
class SynthSample:
    image: GrayImage
    annotations: list[Annotation]
    true_classes: list[ParticleClass]
    true_pore: PoreEstimate


def pore_grid_mask(cfg: SynthConfig) -> np.ndarray:
    """Boolean mask of pore pixels: a square lattice rotated about the center."""
    side = cfg.image_side
    c = side / 2.0
    ys, xs = np.mgrid[0:side, 0:side]
    px = xs + 0.5 - c
    py = ys + 0.5 - c
    theta = math.radians(cfg.skew_deg)
    u = math.cos(theta) * px + math.sin(theta) * py
    v = -math.sin(theta) * px + math.cos(theta) * py
    # Phase puts the image center on a wall crossing, so border pores are
    # not bisected exactly in half when the side is a pitch multiple.
    off = cfg.pitch / 2.0 + cfg.pore_side / 2.0
    return ((u + off) % cfg.pitch < cfg.pore_side) & (
        (v + off) % cfg.pitch < cfg.pore_side
    )


def generate_filter_background(
    cfg: SynthConfig, rng: SplitMix64 | None = None
) -> GrayImage:
    """Pore grid + horizontal illumination ramp + Gaussian noise, clamped."""
    if rng is None:
        rng = SplitMix64(cfg.seed)
    side = cfg.image_side
    img = np.full((side, side), float(cfg.background_level))
    img[pore_grid_mask(cfg)] = float(cfg.pore_level)
    if cfg.illumination_gradient != 0:
        ramp = cfg.illumination_gradient * (np.arange(side) / (side - 1) - 0.5)
        img += ramp[None, :]
    if cfg.noise_sigma > 0:
        img += rng.normal_array(side * side, cfg.noise_sigma).reshape(side, side)
    return GrayImage(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8))


def _convex_blob(rng: SplitMix64, cx: float, cy: float, diameter: float) -> Polygon | None:
    """Random convex polygon (6-12 vertices) scaled to the given diameter."""
    n = 6 + rng.randint(7)
    angles = sorted(rng.random() * 2 * math.pi for _ in range(n))
    radii = [0.6 + 0.4 * rng.random() for _ in range(n)]
    pts = [(r * math.cos(a), r * math.sin(a)) for a, r in zip(angles, radii)]
    hull = _hull(pts)
    if len(hull) < 3:
        return None
    # Scale so the max pairwise distance equals the requested diameter.
    dmax = max(
        math.hypot(a[0] - b[0], a[1] - b[1]) for a in hull for b in hull
    )
    if dmax <= 0:
        return None
    s = diameter / dmax
    return Polygon(tuple((cx + s * x, cy + s * y) for x, y in hull))


def _hull(pts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(pts))
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _fiber_polygon(
    rng: SplitMix64, cx: float, cy: float, length: float, thickness: float
) -> Polygon:
    """Thick polyline of 3-6 gently turning segments, stroked with miter joins."""
    n_seg = 3 + rng.randint(4)
    heading = rng.random() * 2 * math.pi
    seg_len = length / n_seg
    pts = [(0.0, 0.0)]
    for _ in range(n_seg):
        heading += math.radians(rng.uniform(-20.0, 20.0))
        x, y = pts[-1]
        pts.append((x + seg_len * math.cos(heading), y + seg_len * math.sin(heading)))
    # Recenter the path on (cx, cy).
    mx = sum(p[0] for p in pts) / len(pts)
    my = sum(p[1] for p in pts) / len(pts)
    pts = [(x - mx + cx, y - my + cy) for x, y in pts]

    half = thickness / 2.0
    left, right = [], []
    for i, (x, y) in enumerate(pts):
        if i == 0:
            dx, dy = pts[1][0] - x, pts[1][1] - y
        elif i == len(pts) - 1:
            dx, dy = x - pts[i - 1][0], y - pts[i - 1][1]
        else:
            dx = pts[i + 1][0] - pts[i - 1][0]
            dy = pts[i + 1][1] - pts[i - 1][1]
        norm = math.hypot(dx, dy)
        nx, ny = -dy / norm, dx / norm
        left.append((x + half * nx, y + half * ny))
        right.append((x - half * nx, y - half * ny))
    return Polygon(tuple(left + right[::-1]))


def _normalize(poly: Polygon, side: int) -> Polygon | None:
    verts = []
    for x, y in poly.vertices:
        nx, ny = x / side, y / side
        if not (0.0 <= nx <= 1.0 and 0.0 <= ny <= 1.0):
            return None
        verts.append((nx, ny))
    return Polygon(tuple(verts))


def generate_sample(cfg: SynthConfig) -> SynthSample:
    """Background plus n_particles non-overlapping instances with ground truth."""
    rng = SplitMix64(cfg.seed)
    canvas = generate_filter_background(cfg, rng).pixels.copy()
    side = cfg.image_side
    occupied = np.zeros((side, side), dtype=bool)

    n_fibers = round(cfg.n_particles * cfg.fiber_fraction)
    annotations: list[Annotation] = []
    true_classes: list[ParticleClass] = []
    for k in range(cfg.n_particles):
        is_fiber = k < n_fibers
        placed = False
        for _ in range(_MAX_PLACEMENT_ATTEMPTS):
            cx = rng.uniform(0.05 * side, 0.95 * side)
            cy = rng.uniform(0.05 * side, 0.95 * side)
            if is_fiber:
                length = rng.uniform(*cfg.fiber_length_range)
                thickness = rng.uniform(*cfg.fiber_thickness_range)
                poly = _fiber_polygon(rng, cx, cy, length, thickness)
            else:
                diameter = rng.uniform(*cfg.particle_diameter_range)
                poly = _convex_blob(rng, cx, cy, diameter)
            if poly is None:
                continue
            npoly = _normalize(poly, side)
            if npoly is None:
                continue
            mask = rasterize(npoly, side, side).bits
            if not mask.any() or (mask & occupied).any():
                continue
            lo, hi = cfg.particle_level_range
            level = lo if hi == lo else lo + rng.randint(hi - lo + 1)
            canvas[mask] = level
            occupied |= mask
            annotations.append(Annotation(category_id=0, polygon=npoly))
            true_classes.append(
                ParticleClass.FIBER if is_fiber else ParticleClass.PARTICLE
            )
            placed = True
            break
        if not placed:
            raise PlacementFailure(
                f"could not place instance {k + 1}/{cfg.n_particles} "
                f"after {_MAX_PLACEMENT_ATTEMPTS} attempts"
            )
    return SynthSample(
        image=GrayImage(canvas),
        annotations=annotations,
        true_classes=true_classes,
        true_pore=cfg.true_pore,
    )


_STRATA_CYCLE = [
    FilterType.SI_1UM,
    FilterType.SI_10UM,
    FilterType.CRATE_STRAIGHT,
    FilterType.CRATE_SKEWED,
]


def generate_dataset(cfg: SynthConfig, n_images: int, out_dir, jobs: int = 1) -> Path:
    """Write n_images samples (PGM + labels) and a dataset index CSV.

    Per-image seed = cfg.seed + image ordinal; the filter_type column cycles
    over the four strata. Per-image seeds are independent, so generation may
    run in parallel without changing any output byte. Returns the index path.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "images").mkdir(exist_ok=True)
        (out / "labels").mkdir(exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc

    configs = [replace(cfg, seed=cfg.seed + i) for i in range(n_images)]
    if jobs > 1 and n_images > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            samples = list(ex.map(generate_sample, configs))
    else:
        samples = [generate_sample(c) for c in configs]

    entries = []
    for i, sample in enumerate(samples):
        stem = f"synth{i:04d}"
        image_path = out / "images" / f"{stem}.pgm"
        label_path = out / "labels" / f"{stem}.txt"
        save_image(sample.image, image_path)
        try:
            label_path.write_text(write_label_file(sample.annotations))
        except OSError as exc:
            raise IoFailure(f"cannot write {label_path}: {exc}") from exc
        entries.append(
            DatasetEntry(
                image_id=stem,
                filter_type=_STRATA_CYCLE[i % 4],
                image_path=str(image_path),
                label_path=str(label_path),
                annotations=sample.annotations,
            )
        )
    index_path = out / "index.csv"
    write_index(entries, index_path)
    return index_path
