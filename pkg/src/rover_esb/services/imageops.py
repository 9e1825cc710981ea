"""Deterministic pixel operations and the binary PPM (P6) image format.

Images are row-major RGB, 8 bits per channel.  All arithmetic is pinned:
bilinear resampling uses the center-aligned source coordinate
``s = (d + 0.5) * src/dst - 0.5`` clamped to [0, src-1], rounding half
up per channel; noise reduction is a 3x3 per-channel median with
replicated borders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Image", "ppm_encode", "ppm_decode", "magnify", "noise_reduction"]


@dataclass(frozen=True, eq=False)
class Image:
    pixels: np.ndarray  # shape (height, width, 3), dtype uint8

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixels must be (h, w, 3), got {px.shape}")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)

    @classmethod
    def filled(cls, width: int, height: int, rgb=(255, 255, 255)) -> "Image":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:, :] = rgb
        return cls(px)


def ppm_encode(img: Image) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def _header_tokens(data: bytes):
    """Yield whitespace-separated header tokens, honoring '#' comments,
    and finally the offset where raster data begins."""
    i = 0
    tokens = []
    while len(tokens) < 4:
        if i >= len(data):
            raise ValueError("truncated PPM header")
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    if i >= len(data) or not data[i:i + 1].isspace():
        raise ValueError("missing whitespace after PPM maxval")
    return tokens, i + 1


def ppm_decode(data: bytes) -> Image:
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM (P6) image")
    tokens, offset = _header_tokens(data)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise ValueError("non-numeric PPM header fields") from None
    if width < 1 or height < 1:
        raise ValueError(f"bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise ValueError(f"unsupported PPM maxval {maxval}")
    need = width * height * 3
    raster = data[offset:offset + need]
    if len(raster) != need or len(data) - offset != need:
        raise ValueError(f"PPM raster size mismatch: expected {need} bytes, got {len(data) - offset}")
    px = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return Image(px.copy())


def _source_coords(dst: int, src: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = np.arange(dst, dtype=np.float64)
    s = np.clip((d + 0.5) * (src / dst) - 0.5, 0.0, src - 1.0)
    lo = np.floor(s).astype(np.int64)
    hi = np.minimum(lo + 1, src - 1)
    return lo, hi, s - lo


def magnify(img: Image, new_width: int, new_height: int) -> Image:
    """Resample to exactly (new_width, new_height) with bilinear filtering."""
    if new_width < 1 or new_height < 1:
        raise ValueError(f"target dimensions must be positive, got {new_width}x{new_height}")
    x0, x1, fx = _source_coords(new_width, img.width)
    y0, y1, fy = _source_coords(new_height, img.height)
    px = img.pixels.astype(np.float64)
    fx = fx[np.newaxis, :, np.newaxis]
    fy = fy[:, np.newaxis, np.newaxis]
    top = px[y0][:, x0] * (1.0 - fx) + px[y0][:, x1] * fx
    bottom = px[y1][:, x0] * (1.0 - fx) + px[y1][:, x1] * fx
    blended = top * (1.0 - fy) + bottom * fy
    return Image(np.floor(blended + 0.5).clip(0, 255).astype(np.uint8))


def noise_reduction(img: Image) -> Image:
    """3x3 per-channel median filter; borders replicate edge pixels."""
    padded = np.pad(img.pixels, ((1, 1), (1, 1), (0, 0)), mode="edge")
    h, w = img.height, img.width
    stack = np.stack([
        padded[dy:dy + h, dx:dx + w, :]
        for dy in range(3)
        for dx in range(3)
    ])
    return Image(np.median(stack, axis=0).astype(np.uint8))
