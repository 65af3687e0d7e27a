"""Filter pore-size estimation via connected-component analysis.

Pipeline: Otsu binarize -> invert (pores are dark) -> connected components
-> keep components of plausible pore area -> modal size bucket -> mean area
of the modal bucket. Pores are treated as squares, so side = sqrt(area) and
diagonal = side * sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .enhance import BinaryMask, invert, otsu_binarize
from .errors import InvalidConfig, NoPoresFound
from .image_core import GrayImage

DEFAULT_MIN_AREA = 25.0
DEFAULT_MAX_AREA_FRACTION = 0.10  # of the image area


@dataclass(frozen=True)
class ComponentLabeling:
    labels: np.ndarray  # (height, width) int32, 0 = background
    sizes: list[int]  # pixel count per component, index = label - 1

    @property
    def count(self) -> int:
        return len(self.sizes)


def connected_components(mask: BinaryMask, connectivity: int = 4) -> ComponentLabeling:
    """Label foreground components; ids follow raster-scan first-encounter order.

    Run-based two-pass labeling with union-find over row runs.
    """
    if connectivity not in (4, 8):
        raise InvalidConfig("connectivity must be 4 or 8")
    h, w = mask.bits.shape
    labels = np.zeros((h, w), dtype=np.int32)

    # Decompose each row into runs of consecutive foreground pixels.
    runs = []  # (y, x_start, x_end_exclusive)
    row_runs: list[list[int]] = [[] for _ in range(h)]
    for y in range(h):
        row = mask.bits[y]
        if not row.any():
            continue
        padded = np.diff(np.concatenate(([False], row, [False])).astype(np.int8))
        starts = np.flatnonzero(padded == 1)
        ends = np.flatnonzero(padded == -1)
        for s, e in zip(starts, ends):
            row_runs[y].append(len(runs))
            runs.append((y, int(s), int(e)))

    parent = list(range(len(runs)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    reach = 0 if connectivity == 4 else 1  # 8-connectivity joins diagonal touches
    for y in range(1, h):
        above = row_runs[y - 1]
        if not above or not row_runs[y]:
            continue
        ai = 0
        for ri in row_runs[y]:
            _, s, e = runs[ri]
            while ai < len(above) and runs[above[ai]][2] + reach <= s:
                ai += 1
            aj = ai
            while aj < len(above) and runs[above[aj]][1] < e + reach:
                union(ri, above[aj])
                aj += 1
            if aj > ai:
                aj -= 1  # last overlapping run may also touch the next run
            ai = aj

    # Assign component ids in raster order of each root's first run.
    root_to_id: dict[int, int] = {}
    sizes: list[int] = []
    for i, (y, s, e) in enumerate(runs):
        root = find(i)
        cid = root_to_id.get(root)
        if cid is None:
            cid = len(sizes) + 1
            root_to_id[root] = cid
            sizes.append(0)
        labels[y, s:e] = cid
        sizes[cid - 1] += e - s
    return ComponentLabeling(labels=labels, sizes=sizes)


@dataclass(frozen=True)
class PoreEstimate:
    pore_area_px: float
    pore_side_px: float
    pore_diagonal_px: float
    contributing_components: int

    @staticmethod
    def from_area(area: float, contributing: int = 0) -> "PoreEstimate":
        side = math.sqrt(area)
        return PoreEstimate(
            pore_area_px=area,
            pore_side_px=side,
            pore_diagonal_px=side * math.sqrt(2.0),
            contributing_components=contributing,
        )


def estimate_pore_size(
    img: GrayImage,
    area_bounds: tuple[float, float] | None = None,
) -> PoreEstimate:
    """Estimate the modal pore area of a filter image.

    Component sizes are quantized into buckets of width 5% of the median
    kept size before taking the mode (raw pixel areas almost never repeat);
    the estimate is the mean area within the modal bucket.
    """
    if area_bounds is None:
        area_bounds = (DEFAULT_MIN_AREA, DEFAULT_MAX_AREA_FRACTION * img.width * img.height)
    min_area, max_area = area_bounds
    if min_area < 1 or min_area >= max_area:
        raise InvalidConfig("area bounds must satisfy 1 <= min < max")

    pores = invert(otsu_binarize(img))
    labeling = connected_components(pores, connectivity=4)
    kept = [s for s in labeling.sizes if min_area <= s <= max_area]
    if not kept:
        raise NoPoresFound(
            f"no connected component with area in [{min_area}, {max_area}]"
        )

    median = float(np.median(kept))
    bucket_width = max(1, round(0.05 * median))
    buckets: dict[int, list[int]] = {}
    for s in kept:
        buckets.setdefault(s // bucket_width, []).append(s)
    modal = min(buckets, key=lambda b: (-len(buckets[b]), b))  # tie: smaller bucket
    members = buckets[modal]
    return PoreEstimate.from_area(sum(members) / len(members), len(members))
