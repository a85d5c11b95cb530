"""Maximally stable extremal region segmentation.

Extremal regions are connected components of threshold level sets, swept in
both polarities (dark regions from the image, light regions from its
inversion). A component tree supplies every component with its area and its
nesting lineage; stability q compares a component against its lineage delta
levels earlier, and components that are local stability minima inside the
allowed area band survive. Heavily overlapping survivors merge, and a final
greedy pass keeps a stability-sorted disjoint subset so the output is a
single-label segmentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage.morphology import max_tree

from .errors import InvalidParameterError
from .imaging import GrayImage, round_half_up

__all__ = ["MserParams", "Region", "RegionMap", "mser_segment", "region_at"]

# 4-connectivity everywhere: level-set components and the tree must agree.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

DEFAULT_MAX_AREA_FRAC = 0.144


@dataclass(frozen=True)
class MserParams:
    """Stability sweep parameters.

    ``max_area`` of None means the default fraction 0.144 of the image area.
    ``merge_overlap`` is the IoU above which two stable regions collapse into
    their union.
    """

    delta: int = 5
    max_variation: float = 0.25
    min_area: int = 60
    max_area: int | None = None
    merge_overlap: float = 0.6

    def __post_init__(self) -> None:
        if self.delta < 1:
            raise InvalidParameterError("delta must be at least 1")
        if self.max_variation <= 0:
            raise InvalidParameterError("max_variation must be positive")
        if self.min_area < 1:
            raise InvalidParameterError("min_area must be at least 1")
        if self.max_area is not None and self.max_area < self.min_area:
            raise InvalidParameterError("max_area must be >= min_area")
        if not 0.0 < self.merge_overlap <= 1.0:
            raise InvalidParameterError("merge_overlap must be in (0, 1]")


@dataclass
class Region:
    """One stable region.

    ``pixels`` are sorted flat indices into the image. ``level`` is the last
    threshold of the sweep (``polarity`` says which sweep) at which the
    component still had exactly this pixel set, so re-thresholding at
    ``level`` reproduces it. ``bbox`` is (min_x, min_y, max_x, max_y),
    inclusive.
    """

    ident: int
    pixels: np.ndarray
    area: int
    bbox: tuple[int, int, int, int]
    mean_intensity: float
    level: int
    polarity: str
    stability: float


@dataclass
class RegionMap:
    """Disjoint region labelling; label 0 means no stable region."""

    label: np.ndarray
    regions: dict[int, Region]

    @property
    def height(self) -> int:
        return self.label.shape[0]

    @property
    def width(self) -> int:
        return self.label.shape[1]


@dataclass
class _Candidate:
    pixels: np.ndarray
    area: int
    level: int
    polarity: str
    stability: float


def _stable_nodes(values: np.ndarray, params: MserParams, max_area: int,
                  polarity: str) -> list[_Candidate]:
    """Stable component-tree nodes of the lower level sets of ``values``."""
    h, w = values.shape
    n = h * w
    # max_tree builds upper-set components; invert to sweep lower sets.
    parent_img, order = max_tree(255 - values, connectivity=1)
    par = parent_img.ravel()
    val = values.ravel().astype(np.int64)
    root = int(order[0])

    canon = val != val[par]
    canon[root] = True

    area = np.ones(n, dtype=np.int64)
    for p in order[::-1]:
        if p != root:
            area[par[p]] += area[p]

    canon_idx = np.flatnonzero(canon)
    main_child = np.full(n, -1, dtype=np.int64)
    best_area = np.zeros(n, dtype=np.int64)
    for c in canon_idx:
        if c == root:
            continue
        p = par[c]
        if area[c] > best_area[p]:
            best_area[p] = area[c]
            main_child[p] = c

    # Interval end: last sweep level before the node is absorbed upward.
    end = np.empty(n, dtype=np.int64)
    end[canon_idx] = val[par[canon_idx]] - 1
    end[root] = 255

    q = np.full(n, np.inf)
    for c in canon_idx:
        j = end[c] - params.delta
        if j >= val[c]:
            q[c] = 0.0
            continue
        m = main_child[c]
        while m != -1 and val[m] > j:
            m = main_child[m]
        if m != -1:
            q[c] = (area[c] - area[m]) / area[m]

    out: list[_Candidate] = []
    by_level: dict[int, list[int]] = {}
    for c in canon_idx:
        if c == root:
            continue
        if not params.min_area <= area[c] <= max_area:
            continue
        if not q[c] < params.max_variation:
            continue
        if q[c] > q[par[c]]:
            continue
        m = main_child[c]
        if m != -1 and q[c] > q[m]:
            continue
        by_level.setdefault(int(end[c]), []).append(int(c))

    # Extract pixel sets by re-thresholding at each node's recorded level;
    # the labelled component seeded at the node is exactly its pixel set.
    for lvl, seeds in sorted(by_level.items()):
        labels, _ = ndimage.label(values <= lvl, structure=_CROSS)
        flat_labels = labels.ravel()
        for seed in seeds:
            pixels = np.flatnonzero(flat_labels == flat_labels[seed])
            out.append(
                _Candidate(
                    pixels=pixels,
                    area=int(area[seed]),
                    level=lvl,
                    polarity=polarity,
                    stability=float(q[seed]),
                )
            )
    return out


def _overlap(a: _Candidate, b: _Candidate) -> float:
    inter = np.intersect1d(a.pixels, b.pixels, assume_unique=True).size
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _merge_overlapping(cands: list[_Candidate], threshold: float) -> list[_Candidate]:
    """Collapse candidates with IoU above threshold into their unions."""
    if not cands:
        return []
    boxes = np.array(
        [[c.pixels.min(), c.pixels.max(), c.area] for c in cands], dtype=np.int64
    )
    uf = _UnionFind(len(cands))
    for i in range(len(cands)):
        for j in range(i + 1, len(cands)):
            small = min(boxes[i, 2], boxes[j, 2])
            big = max(boxes[i, 2], boxes[j, 2])
            if small <= threshold * big:
                continue
            if boxes[i, 1] < boxes[j, 0] or boxes[j, 1] < boxes[i, 0]:
                continue
            if _overlap(cands[i], cands[j]) > threshold:
                uf.union(i, j)

    groups: dict[int, list[_Candidate]] = {}
    for i, c in enumerate(cands):
        groups.setdefault(uf.find(i), []).append(c)

    merged: list[_Candidate] = []
    for members in groups.values():
        if len(members) == 1:
            merged.append(members[0])
            continue
        # Same-polarity overlaps are nested components, so the union equals
        # the largest member and inherits its statistics wholesale.
        pixels = np.unique(np.concatenate([m.pixels for m in members]))
        rep = max(members, key=lambda m: m.area)
        merged.append(
            _Candidate(
                pixels=pixels,
                area=int(pixels.size),
                level=rep.level,
                polarity=rep.polarity,
                stability=rep.stability,
            )
        )
    return merged


def mser_segment(img: GrayImage, params: MserParams | None = None) -> RegionMap:
    """Segment an image into disjoint maximally stable extremal regions.

    Region ids run from 1 in decreasing area order; the returned label image
    uses 0 for pixels in no stable region. Region statistics (mean intensity,
    level) refer to the image as given, so pass the enhanced image when the
    segmentation feeds descriptor augmentation.
    """
    params = params or MserParams()
    values = img.pixels
    h, w = values.shape
    max_area = params.max_area
    if max_area is None:
        max_area = int(DEFAULT_MAX_AREA_FRAC * h * w)

    cands = _stable_nodes(values, params, max_area, "dark")
    cands += _stable_nodes(255 - values, params, max_area, "light")
    cands = _merge_overlapping(cands, params.merge_overlap)
    cands = [c for c in cands if params.min_area <= c.area <= max_area]

    # Most stable first; survivors must not touch anything already kept.
    cands.sort(key=lambda c: (c.stability, -c.area, int(c.pixels[0])))
    occupied = np.zeros(h * w, dtype=bool)
    kept: list[_Candidate] = []
    for c in cands:
        if occupied[c.pixels].any():
            continue
        occupied[c.pixels] = True
        kept.append(c)

    kept.sort(key=lambda c: (-c.area, c.stability, int(c.pixels[0])))
    label = np.zeros((h, w), dtype=np.int32)
    regions: dict[int, Region] = {}
    flat_values = values.ravel()
    for ident, c in enumerate(kept, start=1):
        ys, xs = np.divmod(c.pixels, w)
        label.ravel()[c.pixels] = ident
        regions[ident] = Region(
            ident=ident,
            pixels=c.pixels,
            area=c.area,
            bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
            mean_intensity=float(flat_values[c.pixels].mean()),
            level=c.level,
            polarity=c.polarity,
            stability=c.stability,
        )
    return RegionMap(label=label, regions=regions)


def region_at(rmap: RegionMap, x: float, y: float) -> int | None:
    """Region id containing the (sub-pixel) point, or None on unlabelled pixels.

    Coordinates round half up to the nearest pixel. Points that land outside
    the image are a caller error.
    """
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidParameterError(f"point ({x}, {y}) is not finite")
    px = int(round_half_up(x))
    py = int(round_half_up(y))
    if not (0 <= px < rmap.width and 0 <= py < rmap.height):
        raise InvalidParameterError(
            f"point ({x}, {y}) rounds outside the {rmap.width}x{rmap.height} label map"
        )
    ident = int(rmap.label[py, px])
    return ident if ident else None
