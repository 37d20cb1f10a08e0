"""Canny edge detector producing the layout-conditioning image.

The stage order and arithmetic are part of this module's contract:
identical inputs must yield byte-identical edge maps across runs and
across independent implementations of the same definition.

Stages, in order, all in float64:

1. luma grayscale: (0.299*R + 0.587*G) + 0.114*B, summed left to right
2. separable Gaussian blur, rows then columns, replicated borders;
   per-pixel accumulation in ascending tap order starting from 0.0
3. 3x3 Sobel gradients with clamped borders; taps applied in ascending
   (dy, dx) order; magnitude = sqrt(gx*gx + gy*gy)
4. non-maximum suppression with the gradient direction quantized to
   4 bins (0, 45, 90, 135 degrees; nearest bin, ties to the lower
   angle); a pixel is suppressed only if a neighbor along the gradient
   is strictly greater; neighbor lookups clamp at the image border
5. double threshold (weak: mag >= low, strong: mag >= high) and
   8-connected hysteresis keeping weak pixels reachable from a strong
   pixel through weak/strong chains

The direction bins are decided by comparisons against tan(22.5deg)
rather than by evaluating atan2, so the binning is reproducible
exactly from gx and gy alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .images import EdgeMap, RasterImage

# tan(22.5 degrees): |gy| <= TAN_22_5 * |gx| puts the gradient in the 0-degree bin
TAN_22_5 = 0.4142135623730951

# Sobel taps as (dy, dx, weight), ascending (dy, dx); zero taps omitted
SOBEL_X_TAPS = ((-1, -1, -1.0), (-1, 1, 1.0), (0, -1, -2.0), (0, 1, 2.0), (1, -1, -1.0), (1, 1, 1.0))
SOBEL_Y_TAPS = ((-1, -1, -1.0), (-1, 0, -2.0), (-1, 1, -1.0), (1, -1, 1.0), (1, 0, 2.0), (1, 1, 1.0))


@dataclass(frozen=True)
class CannyParams:
    sigma: float = 1.4
    kernel_radius: int = 2
    low: float = 50.0
    high: float = 100.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kernel_radius < 1:
            raise ValueError(f"kernel_radius must be >= 1, got {self.kernel_radius}")
        if not 0 <= self.low < self.high:
            raise ValueError(f"thresholds must satisfy 0 <= low < high, got {self.low}, {self.high}")


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """Normalized 1-D Gaussian taps for x in [-radius, radius].

    Taps are evaluated with math.exp and normalized by their plain
    left-to-right sum, so any implementation following the same recipe
    reproduces the kernel bit for bit.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    taps = [math.exp(-(float(x) * float(x)) / (2.0 * sigma * sigma))
            for x in range(-radius, radius + 1)]
    total = 0.0
    for tap in taps:
        total += tap
    return np.array([tap / total for tap in taps], dtype=np.float64)


def _shifted(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """img sampled at (y+dy, x+dx) with indices clamped to the border."""
    h, w = img.shape
    iy = np.clip(np.arange(h) + dy, 0, h - 1)
    ix = np.clip(np.arange(w) + dx, 0, w - 1)
    return img[np.ix_(iy, ix)]


def gaussian_blur(gray: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    """Separable Gaussian blur with replicated borders, rows then columns."""
    kernel = gaussian_kernel(sigma, radius)
    out = np.zeros_like(gray)
    for j in range(-radius, radius + 1):
        out += kernel[j + radius] * _shifted(gray, 0, j)
    final = np.zeros_like(out)
    for j in range(-radius, radius + 1):
        final += kernel[j + radius] * _shifted(out, j, 0)
    return final


def _sobel_xy(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if gray.shape[0] < 3 or gray.shape[1] < 3:
        raise ValueError(f"image too small for Sobel, need at least 3x3, got {gray.shape}")
    gx = np.zeros_like(gray)
    for dy, dx, weight in SOBEL_X_TAPS:
        gx += weight * _shifted(gray, dy, dx)
    gy = np.zeros_like(gray)
    for dy, dx, weight in SOBEL_Y_TAPS:
        gy += weight * _shifted(gray, dy, dx)
    return gx, gy


def sobel_gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(gradient magnitude, orientation in radians) of a grayscale image."""
    gx, gy = _sobel_xy(np.asarray(gray, dtype=np.float64))
    magnitude = np.sqrt(gx * gx + gy * gy)
    orientation = np.arctan2(gy, gx)
    return magnitude, orientation


def _direction_bins(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Quantize gradient direction to bins 0 (0deg), 1 (45), 2 (90), 3 (135).

    Equivalent to rounding atan2(gy, gx) mod 180deg to the nearest bin
    with ties going to the lower angle, but decided purely by
    comparisons so both scalar and vectorized code agree exactly.
    """
    ax = np.abs(gx)
    ay = np.abs(gy)
    product = gx * gy
    bins = np.full(gx.shape, 2, dtype=np.int8)
    bins = np.where(product > 0, np.where(ax >= TAN_22_5 * ay, 1, 2), bins)
    bins = np.where(product < 0, np.where(ax > TAN_22_5 * ay, 3, 2), bins)
    return np.where(ay <= TAN_22_5 * ax, 0, bins).astype(np.int8)


# neighbor offsets (dy, dx) along the gradient direction, per bin
_BIN_NEIGHBORS = {
    0: ((0, 1), (0, -1)),
    1: ((1, 1), (-1, -1)),
    2: ((1, 0), (-1, 0)),
    3: ((1, -1), (-1, 1)),
}


def _non_maximum_suppression(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels that survive NMS (local maxima along gradient)."""
    bins = _direction_bins(gx, gy)
    suppressed = np.zeros(magnitude.shape, dtype=bool)
    for bin_id, ((dy1, dx1), (dy2, dx2)) in _BIN_NEIGHBORS.items():
        in_bin = bins == bin_id
        n1 = _shifted(magnitude, dy1, dx1)
        n2 = _shifted(magnitude, dy2, dx2)
        suppressed |= in_bin & ((n1 > magnitude) | (n2 > magnitude))
    return ~suppressed


def _hysteresis(weak: np.ndarray, strong: np.ndarray) -> np.ndarray:
    """Keep weak pixels 8-connected to a strong pixel through weak chains.

    A weak pixel survives exactly when its 8-connected component in the
    weak mask contains a strong pixel, so component labeling gives the
    same result as flood fill from the strong set.
    """
    if not strong.any():
        return np.zeros_like(weak)
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=np.int8))
    anchored = np.zeros(count + 1, dtype=bool)
    anchored[np.unique(labels[strong])] = True
    anchored[0] = False
    return anchored[labels]


def canny(raster: RasterImage, params: CannyParams = CannyParams()) -> EdgeMap:
    """Binary edge map of an RGB raster; see the module docstring for stages."""
    px = raster.pixels.astype(np.float64)
    gray = 0.299 * px[:, :, 0] + 0.587 * px[:, :, 1] + 0.114 * px[:, :, 2]
    blurred = gaussian_blur(gray, params.sigma, params.kernel_radius)
    gx, gy = _sobel_xy(blurred)
    magnitude = np.sqrt(gx * gx + gy * gy)
    surviving = _non_maximum_suppression(magnitude, gx, gy)
    weak = surviving & (magnitude >= params.low)
    strong = weak & (magnitude >= params.high)
    return EdgeMap(bits=_hysteresis(weak, strong))
