"""Shared synthetic-image helpers.

Every test input is generated; nothing reads bundled assets. The cell mosaic
is the workhorse texture: strong corners along cell boundaries, flat interiors
that segment into stable regions, and enough structure to survive heavy tilt.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from regionfeat import GrayImage, Region


def cell_mosaic(side: int, seed: int, cells: int = 400) -> GrayImage:
    """Flat-shaded nearest-site mosaic, lightly blurred, with mild sensor noise."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, side, (cells, 2))
    shades = rng.integers(10, 246, cells)
    yy, xx = np.mgrid[0:side, 0:side]
    best = np.full((side, side), np.inf)
    lab = np.zeros((side, side), dtype=np.int64)
    for i in range(cells):
        d = (xx - pts[i, 0]) ** 2 + (yy - pts[i, 1]) ** 2
        closer = d < best
        best[closer] = d[closer]
        lab[closer] = i
    img = ndimage.gaussian_filter(shades[lab].astype(np.float64), 0.8)
    img += rng.normal(0, 2.0, img.shape)
    return GrayImage.from_array(np.clip(img, 0, 255))


def blob_image(side: int, seed: int, blobs: int = 6) -> GrayImage:
    """Smooth bumps on a mid-gray background; good for component-tree checks."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:side, 0:side]
    img = np.full((side, side), 128.0)
    for _ in range(blobs):
        cx, cy = rng.uniform(4, side - 4, 2)
        sig = rng.uniform(1.5, side / 6)
        amp = rng.uniform(-120, 120)
        img += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sig * sig))
    return GrayImage.from_array(np.clip(img, 0, 255))


def region_from_mask(mask: np.ndarray, img: GrayImage, ident: int = 1) -> Region:
    """Build a Region record directly from a boolean mask."""
    pixels = np.flatnonzero(mask.reshape(-1))
    ys, xs = np.nonzero(mask)
    return Region(
        ident=ident,
        pixels=pixels,
        area=int(pixels.size),
        bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
        mean_intensity=float(img.pixels[mask].mean()),
        level=0,
        polarity="dark",
        stability=0.0,
    )


@pytest.fixture(scope="session")
def mosaic_256() -> GrayImage:
    return cell_mosaic(256, seed=3, cells=150)


@pytest.fixture(scope="session")
def mosaic_512() -> GrayImage:
    return cell_mosaic(512, seed=5, cells=400)


# --------------------------------------------------------------------------
# Brute-force extremal-region oracles (shared by the unit and acceptance
# suites). These re-derive everything from per-threshold labeling and never
# touch the component-tree implementation.
# --------------------------------------------------------------------------

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def lower_set_components(values: np.ndarray, level: int) -> list[np.ndarray]:
    """4-connected components of values <= level, as sorted flat-index arrays."""
    labels, count = ndimage.label(values <= level, structure=_CROSS)
    flat = labels.ravel()
    return [np.flatnonzero(flat == i) for i in range(1, count + 1)]


def component_containing(values: np.ndarray, level: int, pixel: int) -> np.ndarray:
    labels, _ = ndimage.label(values <= level, structure=_CROSS)
    flat = labels.ravel()
    assert flat[pixel] != 0, "seed pixel not inside the lower set"
    return np.flatnonzero(flat == flat[pixel])


def lineage_change_rates(
    values: np.ndarray, pixels: np.ndarray, level: int, delta: int
) -> set[float]:
    """Candidate Eq-style change rates for one region, by brute force.

    Descends the nested-component lineage from the region toward threshold
    level - delta, always stepping into a largest child. Area ties make the
    lineage ambiguous, so every tied branch is followed and the full set of
    reachable rates is returned (empty-child branches contribute inf).
    """
    flat_vals = values.ravel()
    area0 = pixels.size
    j = level - delta
    if j >= int(flat_vals[pixels].max()):
        return {0.0}
    rates: set[float] = set()
    stack = [np.asarray(pixels)]
    while stack:
        cur = stack.pop()
        sub_level = int(flat_vals[cur].max()) - 1
        # int64 working copy: a uint8 field cannot hold the +inf sentinel 256.
        clipped = np.full(values.size, 256, dtype=np.int64)
        clipped[cur] = flat_vals[cur]
        comps = lower_set_components(clipped.reshape(values.shape), sub_level)
        if not comps:
            rates.add(float("inf"))
            continue
        best = max(c.size for c in comps)
        for comp in comps:
            if comp.size != best:
                continue
            if int(flat_vals[comp].max()) <= j:
                rates.add((area0 - comp.size) / comp.size)
            else:
                stack.append(comp)
    return rates
