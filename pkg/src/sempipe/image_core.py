"""8-bit grayscale image container, lossless PGM/PNG I/O, center crop."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptData, ImageTooSmall, IoFailure, UnsupportedFormat


@dataclass(frozen=True)
class GrayImage:
    """Single-channel 8-bit raster, row-major."""

    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        if px.dtype != np.uint8:
            raise ValueError("pixels must be uint8")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.pixels.shape == other.pixels.shape
            and bool(np.array_equal(self.pixels, other.pixels))
        )


def _rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    # Integer BT.601-style weights, exact across platforms.
    r = rgb[..., 0].astype(np.uint32)
    g = rgb[..., 1].astype(np.uint32)
    b = rgb[..., 2].astype(np.uint32)
    return ((77 * r + 150 * g + 29 * b) >> 8).astype(np.uint8)


def _read_pgm(data: bytes) -> GrayImage:
    # P5 header: magic, width, height, maxval, separated by whitespace;
    # '#' starts a comment running to end of line.
    pos = 2  # past "P5"
    fields = []
    while len(fields) < 3:
        if pos >= len(data):
            raise CorruptData("truncated PGM header")
        c = data[pos : pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            fields.append(data[pos:end])
            pos = end
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise CorruptData("non-numeric PGM header field") from exc
    if maxval != 255:
        raise UnsupportedFormat(f"PGM maxval {maxval}, expected 255 (8-bit)")
    if width < 1 or height < 1:
        raise CorruptData("non-positive PGM dimensions")
    pos += 1  # single whitespace after maxval
    payload = data[pos : pos + width * height]
    if len(payload) != width * height:
        raise CorruptData("truncated PGM pixel payload")
    return GrayImage(np.frombuffer(payload, dtype=np.uint8).reshape(height, width))


def _read_png(path: Path) -> GrayImage:
    from PIL import Image

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                return GrayImage(np.asarray(im, dtype=np.uint8))
            if mode == "P":
                im = im.convert("RGB")
                mode = "RGB"
            if mode in ("RGB", "RGBA"):
                arr = np.asarray(im)[..., :3]
                return GrayImage(_rgb_to_luma(arr))
            raise UnsupportedFormat(f"PNG mode {mode!r} is not 8-bit gray or RGB")
    except UnsupportedFormat:
        raise
    except OSError as exc:
        raise CorruptData(f"cannot decode PNG {path}: {exc}") from exc


def load_image(path) -> GrayImage:
    """Load an 8-bit PGM (P5) or PNG; color PNG is reduced to integer luma."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if data[:2] == b"P5":
        return _read_pgm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _read_png(path)
    raise UnsupportedFormat(f"{path}: unknown magic {data[:2]!r}")


def save_image(img: GrayImage, path) -> None:
    """Write binary PGM (P5, maxval 255). load_image round-trips bit-exactly."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    try:
        Path(path).write_bytes(header + img.pixels.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def center_crop(img: GrayImage, side: int = 1024) -> GrayImage:
    """Crop a side x side window anchored at the geometric center (floor offsets)."""
    if img.width < side or img.height < side:
        raise ImageTooSmall(
            f"image {img.width}x{img.height} smaller than crop side {side}"
        )
    ox = (img.width - side) // 2
    oy = (img.height - side) // 2
    return GrayImage(img.pixels[oy : oy + side, ox : ox + side].copy())
