"""Polygon segmentation labels: parsing, rasterization, shape metrics.

Label file convention (one instance per line, normalized coordinates):

    ground truth: category x1 y1 x2 y2 ... xn yn
    predictions:  category confidence x1 y1 ... xn yn
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .enhance import BinaryMask
from .errors import DegeneratePolygon, MalformedLine, OutOfRange

_COORD_SLACK = 1e-6


@dataclass(frozen=True)
class Polygon:
    """Closed polygon, vertices normalized to [0, 1]."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise MalformedLine("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", tuple(map(tuple, self.vertices)))

    def denormalized(self, width: int, height: int) -> np.ndarray:
        pts = np.asarray(self.vertices, dtype=np.float64)
        return pts * np.array([width, height], dtype=np.float64)


@dataclass(frozen=True)
class Annotation:
    category_id: int
    polygon: Polygon
    confidence: float | None = None


class ParticleClass(Enum):
    PARTICLE = "particle"
    FIBER = "fiber"


@dataclass(frozen=True)
class ShapeMetrics:
    area_px: float
    length_px: float  # longer side of the minimum-area rotated rectangle
    width_px: float  # shorter side

    @property
    def elongation(self) -> float:
        return self.length_px / self.width_px


def _clamp_coord(v: float, line_no: int) -> float:
    if -_COORD_SLACK <= v <= 1.0 + _COORD_SLACK:
        return min(max(v, 0.0), 1.0)
    raise OutOfRange(f"line {line_no}: coordinate {v} outside [0, 1]")


def parse_label_file(text: str, expect_confidence: bool = False) -> list[Annotation]:
    """Parse polygon labels, one instance per non-empty line."""
    annots = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise MalformedLine(f"line {line_no}: non-numeric token") from exc
        category = values[0]
        if category < 0 or category != int(category):
            raise MalformedLine(f"line {line_no}: bad category {tokens[0]}")
        confidence = None
        coords = values[1:]
        if expect_confidence:
            if not coords:
                raise MalformedLine(f"line {line_no}: missing confidence")
            confidence = coords[0]
            if not (0.0 <= confidence <= 1.0):
                raise OutOfRange(f"line {line_no}: confidence {confidence}")
            coords = coords[1:]
        if len(coords) % 2 != 0:
            raise MalformedLine(f"line {line_no}: odd coordinate count")
        if len(coords) < 6:
            raise MalformedLine(f"line {line_no}: fewer than 3 vertices")
        coords = [_clamp_coord(c, line_no) for c in coords]
        vertices = list(zip(coords[0::2], coords[1::2]))
        annots.append(Annotation(int(category), Polygon(tuple(vertices)), confidence))
    return annots


def write_label_file(annots: list[Annotation], with_confidence: bool = False) -> str:
    """Inverse of parse_label_file at 6-decimal coordinate precision."""
    lines = []
    for a in annots:
        tokens = [str(a.category_id)]
        if with_confidence:
            if a.confidence is None:
                raise MalformedLine("annotation has no confidence to write")
            tokens.append(f"{a.confidence:.6f}")
        for x, y in a.polygon.vertices:
            tokens.append(f"{x:.6f}")
            tokens.append(f"{y:.6f}")
        lines.append(" ".join(tokens))
    return "".join(line + "\n" for line in lines)


def rasterize(polygon: Polygon, width: int, height: int) -> BinaryMask:
    """Scanline even-odd fill; a pixel is set iff its center lies inside."""
    if width < 1 or height < 1:
        raise DegeneratePolygon("raster dimensions must be positive")
    pts = polygon.denormalized(width, height)
    bits = np.zeros((height, width), dtype=bool)
    n = len(pts)
    xs, ys = pts[:, 0], pts[:, 1]
    for row in range(height):
        yc = row + 0.5
        crossings = []
        for i in range(n):
            x1, y1 = xs[i], ys[i]
            x2, y2 = xs[(i + 1) % n], ys[(i + 1) % n]
            if (y1 <= yc < y2) or (y2 <= yc < y1):
                crossings.append(x1 + (yc - y1) * (x2 - x1) / (y2 - y1))
        if not crossings:
            continue
        crossings.sort()
        for a, b in zip(crossings[0::2], crossings[1::2]):
            # pixel centers x + 0.5 in [a, b)
            lo = max(0, math.ceil(a - 0.5))
            hi = min(width, math.ceil(b - 0.5))
            if hi > lo:
                bits[row, lo:hi] = True
    return BinaryMask(bits)


def _convex_hull(pts: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, counter-clockwise, no collinear points."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    unique = []
    for i in order:
        p = (pts[i, 0], pts[i, 1])
        if not unique or unique[-1] != p:
            unique.append(p)
    if len(unique) == 1:
        return np.asarray(unique)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in unique:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(unique):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1])


def min_area_rect(pts: np.ndarray) -> tuple[float, float]:
    """(length, width) of the minimum-area rotated bounding rectangle.

    Rotating-calipers sweep over convex-hull edge directions.
    """
    hull = _convex_hull(np.asarray(pts, dtype=np.float64))
    if len(hull) == 1:
        return 0.0, 0.0
    if len(hull) == 2:
        return float(np.hypot(*(hull[1] - hull[0]))), 0.0
    best = None
    for i in range(len(hull)):
        edge = hull[(i + 1) % len(hull)] - hull[i]
        norm = np.hypot(edge[0], edge[1])
        if norm == 0:
            continue
        u = edge / norm
        v = np.array([-u[1], u[0]])
        proj_u = hull @ u
        proj_v = hull @ v
        du = proj_u.max() - proj_u.min()
        dv = proj_v.max() - proj_v.min()
        if best is None or du * dv < best[0]:
            best = (du * dv, du, dv)
    assert best is not None
    _, du, dv = best
    return (max(du, dv), min(du, dv))


def shape_metrics(polygon: Polygon, width: int, height: int) -> ShapeMetrics:
    """Pixel area plus min-rect length/width of the denormalized polygon."""
    area = rasterize(polygon, width, height).count()
    if area == 0:
        raise DegeneratePolygon("polygon rasterizes to an empty mask")
    length, rect_w = min_area_rect(polygon.denormalized(width, height))
    if rect_w <= 0:
        raise DegeneratePolygon("polygon has zero width")
    return ShapeMetrics(area_px=float(area), length_px=length, width_px=rect_w)


def classify_fiber(metrics: ShapeMetrics, ratio_threshold: float = 3.0) -> ParticleClass:
    """Fiber iff length/width elongation reaches the threshold.

    The 3.0 default is the conventional fiber aspect criterion; adjust per
    application.
    """
    if metrics.elongation >= ratio_threshold:
        return ParticleClass.FIBER
    return ParticleClass.PARTICLE
