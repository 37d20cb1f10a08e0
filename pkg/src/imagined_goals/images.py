"""Image containers and the binary formats used on disk and on the wire.

Color images travel as binary PPM (P6), edge maps as binary PGM (P5)
restricted to {0, 255}, and depth maps in a small custom container:
a 16-byte header (magic 'IMGD', uint32 width, uint32 height, both
little-endian, 4 reserved zero bytes) followed by row-major float32
little-endian samples. Depth stores Euclidean range along each pixel
ray; background pixels carry +inf.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

DEPTH_MAGIC = b"IMGD"


@dataclass(frozen=True)
class RasterImage:
    """RGB image, uint8, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError(f"raster image must be uint8 with shape (h, w, 3), got {px.dtype} {px.shape}")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class DepthImage:
    """Per-pixel Euclidean range in meters, float32, +inf where no hit."""

    ranges: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.ranges)
        if r.ndim != 2 or r.dtype != np.float32:
            raise ValueError(f"depth image must be float32 with shape (h, w), got {r.dtype} {r.shape}")
        object.__setattr__(self, "ranges", r)

    @property
    def width(self) -> int:
        return self.ranges.shape[1]

    @property
    def height(self) -> int:
        return self.ranges.shape[0]


@dataclass(frozen=True)
class EdgeMap:
    """Binary edge image; bits[v, u] is True where an edge was detected."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.dtype != np.bool_:
            raise ValueError(f"edge map must be bool with shape (h, w), got {b.dtype} {b.shape}")
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


# --- PPM / PGM --------------------------------------------------------------

def encode_ppm(image: RasterImage) -> bytes:
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def decode_ppm(data: bytes) -> RasterImage:
    magic, width, height, maxval, offset = _parse_netpbm_header(data, b"P6")
    if maxval != 255:
        raise ValueError(f"unsupported PPM maxval {maxval}")
    expected = width * height * 3
    body = data[offset:offset + expected]
    if len(body) != expected:
        raise ValueError(f"PPM truncated: expected {expected} bytes, got {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3)
    return RasterImage(pixels=pixels.copy())


def encode_pgm(edges: EdgeMap) -> bytes:
    header = f"P5\n{edges.width} {edges.height}\n255\n".encode("ascii")
    return header + (edges.bits.astype(np.uint8) * 255).tobytes()


def decode_pgm(data: bytes) -> EdgeMap:
    magic, width, height, maxval, offset = _parse_netpbm_header(data, b"P5")
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval}")
    expected = width * height
    body = data[offset:offset + expected]
    if len(body) != expected:
        raise ValueError(f"PGM truncated: expected {expected} bytes, got {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    bad = (pixels != 0) & (pixels != 255)
    if bad.any():
        raise ValueError("edge map PGM pixels must be 0 or 255")
    return EdgeMap(bits=pixels == 255)


def _parse_netpbm_header(data: bytes, magic: bytes) -> tuple[bytes, int, int, int, int]:
    """Return (magic, width, height, maxval, body offset).

    Accepts arbitrary whitespace between tokens and '#' comment lines,
    per the netpbm spec; exactly one whitespace byte separates the maxval
    token from the binary body.
    """
    if not data.startswith(magic):
        raise ValueError(f"not a {magic.decode()} file")
    pos = len(magic)
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated netpbm header")
        tokens.append(int(data[start:pos]))
    pos += 1  # single whitespace byte before the body
    return magic, tokens[0], tokens[1], tokens[2], pos


# --- depth container --------------------------------------------------------

def encode_depth(depth: DepthImage) -> bytes:
    header = DEPTH_MAGIC + struct.pack("<II4x", depth.width, depth.height)
    return header + depth.ranges.astype("<f4").tobytes()


def decode_depth(data: bytes) -> DepthImage:
    if len(data) < 16 or data[:4] != DEPTH_MAGIC:
        raise ValueError("not a depth container")
    width, height = struct.unpack("<II", data[4:12])
    expected = width * height * 4
    body = data[16:16 + expected]
    if len(body) != expected:
        raise ValueError(f"depth container truncated: expected {expected} bytes, got {len(body)}")
    ranges = np.frombuffer(body, dtype="<f4").reshape(height, width)
    return DepthImage(ranges=ranges.astype(np.float32))


# --- file helpers -----------------------------------------------------------

def write_ppm(path: Union[str, Path], image: RasterImage) -> None:
    Path(path).write_bytes(encode_ppm(image))


def read_ppm(path: Union[str, Path]) -> RasterImage:
    return decode_ppm(Path(path).read_bytes())


def write_pgm(path: Union[str, Path], edges: EdgeMap) -> None:
    Path(path).write_bytes(encode_pgm(edges))


def read_pgm(path: Union[str, Path]) -> EdgeMap:
    return decode_pgm(Path(path).read_bytes())


def write_depth(path: Union[str, Path], depth: DepthImage) -> None:
    Path(path).write_bytes(encode_depth(depth))


def read_depth(path: Union[str, Path]) -> DepthImage:
    return decode_depth(Path(path).read_bytes())


def draw_bbox(image: RasterImage, bbox: tuple[float, float, float, float],
              color: tuple[int, int, int] = (255, 0, 0), thickness: int = 2) -> RasterImage:
    """Copy of `image` with an axis-aligned rectangle outline drawn on it.

    The outline extends inward from the bbox border and is clipped to the
    image. Used for the annotated artifacts the pipeline writes; never fed
    back into any measurement.
    """
    x0, y0, x1, y1 = (int(round(v)) for v in bbox)
    px = image.pixels.copy()
    h, w = px.shape[:2]
    x0c, x1c = max(x0, 0), min(x1, w - 1)
    y0c, y1c = max(y0, 0), min(y1, h - 1)
    if x0c > x1c or y0c > y1c:
        return RasterImage(pixels=px)
    col = np.asarray(color, dtype=np.uint8)
    for t in range(thickness):
        if y0 + t <= y1c and 0 <= y0 + t < h:
            px[y0 + t, x0c:x1c + 1] = col
        if y1 - t >= y0c and 0 <= y1 - t < h:
            px[y1 - t, x0c:x1c + 1] = col
        if x0 + t <= x1c and 0 <= x0 + t < w:
            px[y0c:y1c + 1, x0 + t] = col
        if x1 - t >= x0c and 0 <= x1 - t < w:
            px[y0c:y1c + 1, x1 - t] = col
    return RasterImage(pixels=px)
