"""Contrast correction: Otsu binarization and CLAHE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateImage, ImageTooSmall, InvalidConfig
from .image_core import GrayImage


@dataclass(frozen=True)
class BinaryMask:
    """Boolean foreground raster."""

    bits: np.ndarray  # (height, width) bool

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.dtype != np.bool_:
            raise ValueError("bits must be a 2-D bool array")
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class ClaheConfig:
    tile_grid: tuple[int, int] = (8, 8)  # (columns, rows)
    clip_fraction: float = 0.01
    bins: int = 256

    def __post_init__(self):
        cols, rows = self.tile_grid
        if cols < 1 or rows < 1:
            raise InvalidConfig("tile grid must be at least 1x1")
        if self.bins < 2:
            raise InvalidConfig("need at least 2 histogram bins")
        if not (0.0 < self.clip_fraction <= 1.0):
            raise InvalidConfig("clip_fraction must be in (0, 1]")


def otsu_threshold(img: GrayImage) -> int:
    """Threshold maximizing inter-class variance; smallest maximizer on ties.

    Class 0 is intensities <= t; candidates are t in [0, 254].
    """
    hist = np.bincount(img.pixels.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    if np.count_nonzero(hist) < 2:
        raise DegenerateImage("constant image: inter-class variance undefined")

    w0 = np.cumsum(hist)[:255]
    w1 = total - w0
    moments = np.cumsum(hist * np.arange(256))[:255]
    total_moment = (hist * np.arange(256)).sum()
    valid = (w0 > 0) & (w1 > 0)
    sigma_b = np.zeros(255)
    mu0 = np.divide(moments, w0, out=np.zeros(255), where=valid)
    mu1 = np.divide(total_moment - moments, w1, out=np.zeros(255), where=valid)
    sigma_b[valid] = (w0 * w1)[valid] * (mu0 - mu1)[valid] ** 2
    return int(np.argmax(sigma_b))  # argmax returns the first (smallest) maximizer


def binarize(img: GrayImage, t: int) -> BinaryMask:
    """Foreground = pixels strictly brighter than t."""
    if not (0 <= t <= 254):
        raise InvalidConfig(f"threshold {t} outside [0, 254]")
    return BinaryMask(img.pixels > t)


def otsu_binarize(img: GrayImage) -> BinaryMask:
    return binarize(img, otsu_threshold(img))


def invert(mask: BinaryMask) -> BinaryMask:
    return BinaryMask(~mask.bits)


def _tile_edges(extent: int, n_tiles: int) -> list[int]:
    # Equal-size tiles; the last tile absorbs the remainder pixels.
    base = extent // n_tiles
    return [i * base for i in range(n_tiles)] + [extent]


def _tile_lut(tile: np.ndarray, cfg: ClaheConfig) -> np.ndarray:
    """256-entry intensity mapping for one tile."""
    if tile.min() == tile.max():
        return np.arange(256, dtype=np.float64)  # degenerate tile: identity
    n = tile.size
    bin_of = np.arange(256) * cfg.bins // 256
    hist = np.bincount(bin_of[tile.ravel()], minlength=cfg.bins).astype(np.int64)

    clip = int(np.ceil(cfg.clip_fraction * n))
    excess = int((hist - clip).clip(min=0).sum())
    hist = np.minimum(hist, clip)
    # Single-pass uniform redistribution; residue spread one per bin from bin 0.
    hist += excess // cfg.bins
    residue = excess % cfg.bins
    hist[:residue] += 1

    cdf = np.cumsum(hist)
    mapping = np.floor(cdf * 255.0 / n + 0.5)
    return mapping[bin_of].astype(np.float64)


def global_equalize(img: GrayImage) -> GrayImage:
    """Plain global histogram equalization (single-tile CLAHE with no clipping)."""
    lut = _tile_lut(img.pixels, ClaheConfig(tile_grid=(1, 1), clip_fraction=1.0))
    return GrayImage(lut[img.pixels].astype(np.uint8))


def clahe(img: GrayImage, cfg: ClaheConfig = ClaheConfig()) -> GrayImage:
    """Contrast-limited adaptive histogram equalization.

    Per-tile clipped-histogram CDF mappings, blended per pixel by bilinear
    interpolation between the four nearest tile centers (edge tiles extended).
    Deterministic; identity on constant images.
    """
    cols, rows = cfg.tile_grid
    if img.width < cols or img.height < rows:
        raise ImageTooSmall("image smaller than the tile grid")

    xe = _tile_edges(img.width, cols)
    ye = _tile_edges(img.height, rows)
    luts = np.empty((rows, cols, 256))
    for ty in range(rows):
        for tx in range(cols):
            tile = img.pixels[ye[ty] : ye[ty + 1], xe[tx] : xe[tx + 1]]
            luts[ty, tx] = _tile_lut(tile, cfg)

    cx = np.array([(xe[i] + xe[i + 1]) / 2.0 for i in range(cols)])
    cy = np.array([(ye[i] + ye[i + 1]) / 2.0 for i in range(rows)])

    def axis_blend(centers: np.ndarray, extent: int):
        pos = np.arange(extent) + 0.5
        hi = np.searchsorted(centers, pos)
        lo = np.clip(hi - 1, 0, len(centers) - 1)
        hi = np.clip(hi, 0, len(centers) - 1)
        span = centers[hi] - centers[lo]
        w = np.where(span > 0, (pos - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
        return lo, hi, np.clip(w, 0.0, 1.0)

    x0, x1, wx = axis_blend(cx, img.width)
    y0, y1, wy = axis_blend(cy, img.height)

    v = img.pixels
    yy0, yy1 = y0[:, None], y1[:, None]
    xx0, xx1 = x0[None, :], x1[None, :]
    top = (1.0 - wx)[None, :] * luts[yy0, xx0, v] + wx[None, :] * luts[yy0, xx1, v]
    bot = (1.0 - wx)[None, :] * luts[yy1, xx0, v] + wx[None, :] * luts[yy1, xx1, v]
    out = (1.0 - wy)[:, None] * top + wy[:, None] * bot
    return GrayImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))
