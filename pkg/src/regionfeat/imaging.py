"""Grayscale image container, PGM/PPM I/O, enhancement, and affine warping.

The enhancement chain used ahead of region segmentation is contrast-limited
adaptive histogram equalization followed by a bilateral filter: CLAHE lifts
local contrast so weak region boundaries survive thresholding, and the
bilateral pass suppresses the noise CLAHE amplifies while keeping edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidParameterError, ParseError

__all__ = [
    "GrayImage",
    "EnhanceParams",
    "read_pgm",
    "write_pgm",
    "read_ppm",
    "read_image",
    "clahe",
    "bilateral",
    "enhance",
    "warp_affine",
    "invert_affine",
    "round_half_up",
]


def round_half_up(values: np.ndarray | float) -> np.ndarray | float:
    """Round to nearest integer with ties going up (0.5 -> 1).

    numpy's default rounds half to even; every quantization step in this
    library uses half-up so results stay reproducible across code paths.
    """
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image backed by a row-major (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = self.pixels
        if not isinstance(px, np.ndarray) or px.ndim != 2:
            raise InvalidParameterError("pixels must be a 2-d numpy array")
        if px.dtype != np.uint8:
            raise InvalidParameterError("pixels must be uint8")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise InvalidParameterError("image dimensions must be positive")

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of the intensities."""
        return self.pixels.reshape(-1)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "GrayImage":
        """Build from any numeric 2-d array, rounding half-up and clamping to [0, 255]."""
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidParameterError("expected a 2-d array")
        return cls(np.clip(round_half_up(arr), 0, 255).astype(np.uint8))


@dataclass(frozen=True)
class EnhanceParams:
    """Knobs for the CLAHE + bilateral enhancement chain.

    ``clip_limit=None`` selects the adaptive default of four times the
    uniform bin load, 4 * tile_pixels / 256, recomputed per tile.
    """

    tile_rows: int = 8
    tile_cols: int = 8
    clip_limit: int | None = None
    window: int = 9
    sigma_d: float = 3.0
    sigma_r: float = 25.0


# --------------------------------------------------------------------------
# PGM / PPM
# --------------------------------------------------------------------------


def _read_header_tokens(data: bytes, count: int, path: str) -> tuple[list[bytes], int]:
    """Collect ``count`` whitespace-separated header tokens, honoring # comments.

    Returns the tokens and the offset of the first raster byte (one whitespace
    character past the last token).
    """
    tokens: list[bytes] = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace() and data[i : i + 1] != b"#":
            i += 1
        if i == start:
            raise ParseError("truncated header", path=path)
        tokens.append(data[start:i])
    if i >= n or not data[i : i + 1].isspace():
        raise ParseError("missing whitespace after header", path=path)
    return tokens, i + 1


def _parse_dims(tokens: list[bytes], path: str) -> tuple[int, int, int]:
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise ParseError(f"non-numeric header field: {exc}", path=path) from exc
    if width < 1 or height < 1:
        raise ParseError("image dimensions must be positive", path=path)
    return width, height, maxval


def read_pgm(path: str) -> GrayImage:
    """Read a binary (P5) PGM file.

    Only single-byte rasters are supported, so maxval must be at most 255.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ParseError("not a binary PGM (expected magic P5)", path=path)
    tokens, offset = _read_header_tokens(data, 4, path)
    width, height, maxval = _parse_dims(tokens, path)
    if not 1 <= maxval <= 255:
        raise ParseError(f"unsupported maxval {maxval} (need 1..255)", path=path)
    raster = data[offset : offset + width * height]
    if len(raster) != width * height:
        raise ParseError("raster shorter than header promises", path=path)
    return GrayImage(np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy())


def write_pgm(img: GrayImage, path: str) -> None:
    """Write a binary (P5) PGM file with maxval 255."""
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(img.pixels.tobytes())


def read_ppm(path: str) -> GrayImage:
    """Read a binary (P6) PPM file and convert to luminance.

    Y = round(0.299 R + 0.587 G + 0.114 B), half rounding up. maxval other
    than 255 is rejected.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P6"):
        raise ParseError("not a binary PPM (expected magic P6)", path=path)
    tokens, offset = _read_header_tokens(data, 4, path)
    width, height, maxval = _parse_dims(tokens, path)
    if maxval != 255:
        raise ParseError(f"unsupported maxval {maxval} (need 255)", path=path)
    raster = data[offset : offset + width * height * 3]
    if len(raster) != width * height * 3:
        raise ParseError("raster shorter than header promises", path=path)
    rgb = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).astype(np.float64)
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return GrayImage(round_half_up(luma).astype(np.uint8))


def read_image(path: str) -> GrayImage:
    """Read a PGM or PPM file, dispatching on the magic number."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        return read_pgm(path)
    if magic == b"P6":
        return read_ppm(path)
    raise ParseError("unsupported format (expected P5 PGM or P6 PPM)", path=path)


# --------------------------------------------------------------------------
# CLAHE
# --------------------------------------------------------------------------


def _tile_edges(extent: int, tiles: int) -> np.ndarray:
    return (np.arange(tiles + 1, dtype=np.int64) * extent) // tiles


def _clipped_histogram(tile: np.ndarray, clip: int) -> np.ndarray:
    """Clip a tile histogram and spread the excess evenly over all 256 bins.

    The even share is the integer quotient of the excess; the remainder is
    dropped, and bins pushed back over the limit by the share are re-clipped.
    """
    hist = np.bincount(tile.reshape(-1), minlength=256).astype(np.int64)
    excess = int(np.maximum(hist - clip, 0).sum())
    bin_incr = excess // 256
    return np.minimum(hist + bin_incr, clip)


def _tile_map(tile: np.ndarray, clip: int) -> np.ndarray:
    """Equalization lookup for one tile: 255 times the clipped histogram's CDF."""
    hist = _clipped_histogram(tile, clip)
    cdf = np.cumsum(hist, dtype=np.float64)
    cdf /= cdf[-1]
    return round_half_up(255.0 * cdf)


def _axis_blend(coords: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bracketing tile indices and blend weight for one axis.

    Pixels outside the first/last tile center collapse to a single tile,
    which is what reduces the four-map blend to 1-2 maps at the borders.
    """
    hi = np.searchsorted(centers, coords, side="right")
    lo = np.clip(hi - 1, 0, len(centers) - 1)
    hi = np.clip(hi, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(span > 0, (coords - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, np.clip(w, 0.0, 1.0)


def clahe(
    img: GrayImage,
    tile_rows: int = 8,
    tile_cols: int = 8,
    clip_limit: int | None = None,
) -> GrayImage:
    """Contrast-limited adaptive histogram equalization.

    The image is cut into ``tile_rows x tile_cols`` tiles. Each tile gets an
    equalization map built from its clip-limited histogram, and every output
    pixel bilinearly blends the maps of the (up to) four nearest tile centers.

    Parameters
    ----------
    img:
        Input image, at least as large as the tile grid.
    tile_rows, tile_cols:
        Tile grid shape, both positive.
    clip_limit:
        Per-bin count ceiling. ``None`` selects 4 * tile_pixels / 256 per
        tile, the adaptive default.

    Returns
    -------
    GrayImage
        Equalized image of the same size.
    """
    if tile_rows < 1 or tile_cols < 1:
        raise InvalidParameterError("tile grid must be positive")
    if img.height < tile_rows or img.width < tile_cols:
        raise InvalidParameterError(
            f"image {img.width}x{img.height} smaller than tile grid {tile_cols}x{tile_rows}"
        )
    if clip_limit is not None and clip_limit < 1:
        raise InvalidParameterError("clip_limit must be at least 1")

    row_edges = _tile_edges(img.height, tile_rows)
    col_edges = _tile_edges(img.width, tile_cols)
    maps = np.empty((tile_rows, tile_cols, 256), dtype=np.float64)
    for i in range(tile_rows):
        for j in range(tile_cols):
            tile = img.pixels[row_edges[i] : row_edges[i + 1], col_edges[j] : col_edges[j + 1]]
            clip = clip_limit
            if clip is None:
                clip = max(1, int(round_half_up(4.0 * tile.size / 256.0)))
            maps[i, j] = _tile_map(tile, clip)

    row_centers = (row_edges[:-1] + row_edges[1:] - 1) / 2.0
    col_centers = (col_edges[:-1] + col_edges[1:] - 1) / 2.0
    ys = np.arange(img.height, dtype=np.float64)
    xs = np.arange(img.width, dtype=np.float64)
    i0, i1, wy = _axis_blend(ys, row_centers)
    j0, j1, wx = _axis_blend(xs, col_centers)

    ii0 = i0[:, None]
    ii1 = i1[:, None]
    jj0 = j0[None, :]
    jj1 = j1[None, :]
    vy = wy[:, None]
    vx = wx[None, :]
    px = img.pixels
    blend = (
        (1.0 - vy) * (1.0 - vx) * maps[ii0, jj0, px]
        + (1.0 - vy) * vx * maps[ii0, jj1, px]
        + vy * (1.0 - vx) * maps[ii1, jj0, px]
        + vy * vx * maps[ii1, jj1, px]
    )
    return GrayImage.from_array(blend)


# --------------------------------------------------------------------------
# Bilateral filter
# --------------------------------------------------------------------------


def bilateral(
    img: GrayImage,
    window: int = 9,
    sigma_d: float = 3.0,
    sigma_r: float = 25.0,
) -> GrayImage:
    """Edge-preserving smoothing with joint spatial and range Gaussians.

    Each pixel becomes the weighted mean of its window, every neighbor
    weighted by exp(-|offset|^2 / 2 sigma_d^2) * exp(-(df)^2 / 2 sigma_r^2).
    The window is clipped at the borders rather than padded, so the
    normalizer only ever sums weights of real pixels.
    """
    if window < 1 or window % 2 == 0:
        raise InvalidParameterError("window must be odd and positive")
    if sigma_d <= 0 or sigma_r <= 0:
        raise InvalidParameterError("sigmas must be positive")

    f = img.pixels.astype(np.float64)
    h, w = f.shape
    half = window // 2
    num = np.zeros_like(f)
    den = np.zeros_like(f)
    inv_2sd2 = 1.0 / (2.0 * sigma_d * sigma_d)
    inv_2sr2 = 1.0 / (2.0 * sigma_r * sigma_r)
    for dy in range(-half, half + 1):
        ys = slice(max(0, dy), min(h, h + dy))
        yd = slice(max(0, -dy), min(h, h - dy))
        for dx in range(-half, half + 1):
            xs = slice(max(0, dx), min(w, w + dx))
            xd = slice(max(0, -dx), min(w, w - dx))
            spatial = math.exp(-(dx * dx + dy * dy) * inv_2sd2)
            shifted = f[ys, xs]
            centered = f[yd, xd]
            weight = spatial * np.exp(-np.square(shifted - centered) * inv_2sr2)
            num[yd, xd] += weight * shifted
            den[yd, xd] += weight
    return GrayImage.from_array(num / den)


def enhance(img: GrayImage, params: EnhanceParams | None = None) -> GrayImage:
    """CLAHE followed by the bilateral filter, the pre-segmentation chain."""
    p = params or EnhanceParams()
    eq = clahe(img, p.tile_rows, p.tile_cols, p.clip_limit)
    return bilateral(eq, p.window, p.sigma_d, p.sigma_r)


# --------------------------------------------------------------------------
# Affine warping
# --------------------------------------------------------------------------


def _as_affine(m: np.ndarray) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.shape != (2, 3):
        raise InvalidParameterError("affine matrix must be 2x3")
    return arr


def invert_affine(m: np.ndarray) -> np.ndarray:
    """Invert a 2x3 affine map [A | b] into [A^-1 | -A^-1 b]."""
    arr = _as_affine(m)
    lin = arr[:, :2]
    det = lin[0, 0] * lin[1, 1] - lin[0, 1] * lin[1, 0]
    if abs(det) <= 1e-9:
        raise InvalidParameterError(f"affine map is singular (|det|={abs(det):.3g})")
    inv_lin = np.array([[lin[1, 1], -lin[0, 1]], [-lin[1, 0], lin[0, 0]]]) / det
    out = np.empty((2, 3))
    out[:, :2] = inv_lin
    out[:, 2] = -inv_lin @ arr[:, 2]
    return out


def _compression_blur(img: np.ndarray, lin: np.ndarray) -> np.ndarray:
    """Directional pre-blur for the axes the map compresses.

    For each singular value s < 1 the source is blurred along the matching
    right-singular direction with sigma = 0.8 * sqrt((1/s)^2 - 1), the usual
    anti-alias width for tilt-style subsampling. Expanding axes get no blur.
    """
    _, svals, vt = np.linalg.svd(lin)
    sigmas = np.where(svals < 1.0, 0.8 * np.sqrt(np.maximum(1.0 / np.square(svals) - 1.0, 0.0)), 0.0)
    if np.all(sigmas < 1e-3):
        return img
    # Covariance of the anisotropic kernel in source (x, y) coordinates.
    floor = 0.01
    cov = vt.T @ np.diag(np.square(np.maximum(sigmas, floor))) @ vt
    radius = int(math.ceil(3.0 * float(np.max(sigmas))))
    grid = np.arange(-radius, radius + 1, dtype=np.float64)
    dx, dy = np.meshgrid(grid, grid)
    inv = np.linalg.inv(cov)
    quad = inv[0, 0] * dx * dx + (inv[0, 1] + inv[1, 0]) * dx * dy + inv[1, 1] * dy * dy
    kernel = np.exp(-0.5 * quad)
    kernel /= kernel.sum()
    return ndimage.convolve(img, kernel, mode="nearest")


def warp_affine(
    img: GrayImage,
    m: np.ndarray,
    antialias: bool = True,
) -> tuple[GrayImage, np.ndarray]:
    """Apply a 2x3 affine map, sizing the output to the warped bounding box.

    Parameters
    ----------
    img:
        Source image.
    m:
        Forward map [A | b] acting on (x, y) column vectors. Must be
        non-singular (|det A| > 1e-9).
    antialias:
        When true, compressing directions are pre-blurred before sampling.

    Returns
    -------
    (GrayImage, ndarray)
        The warped image and the 2x3 inverse map taking output coordinates
        back to source coordinates. Output pixels with no source are 0.
    """
    arr = _as_affine(m)
    lin = arr[:, :2]
    det = lin[0, 0] * lin[1, 1] - lin[0, 1] * lin[1, 0]
    if abs(det) <= 1e-9:
        raise InvalidParameterError(f"affine map is singular (|det|={abs(det):.3g})")

    corners = np.array(
        [[0.0, 0.0], [img.width, 0.0], [0.0, img.height], [img.width, img.height]]
    )
    warped = corners @ lin.T + arr[:, 2]
    mins = warped.min(axis=0)
    maxs = warped.max(axis=0)
    out_w = max(1, int(math.ceil(maxs[0] - mins[0] - 1e-9)))
    out_h = max(1, int(math.ceil(maxs[1] - mins[1] - 1e-9)))

    forward = arr.copy()
    forward[:, 2] -= mins
    inverse = invert_affine(forward)

    src = img.pixels.astype(np.float64)
    if antialias:
        src = _compression_blur(src, lin)

    xs = np.arange(out_w, dtype=np.float64)
    ys = np.arange(out_h, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    sx = inverse[0, 0] * gx + inverse[0, 1] * gy + inverse[0, 2]
    sy = inverse[1, 0] * gx + inverse[1, 1] * gy + inverse[1, 2]

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0

    def sample(yi: np.ndarray, xi: np.ndarray) -> np.ndarray:
        valid = (xi >= 0) & (xi < img.width) & (yi >= 0) & (yi < img.height)
        vals = np.zeros(xi.shape, dtype=np.float64)
        vals[valid] = src[yi[valid], xi[valid]]
        return vals

    out = (
        (1 - fy) * (1 - fx) * sample(y0, x0)
        + (1 - fy) * fx * sample(y0, x0 + 1)
        + fy * (1 - fx) * sample(y0 + 1, x0)
        + fy * fx * sample(y0 + 1, x0 + 1)
    )
    return GrayImage.from_array(out), inverse
