"""Region signatures and descriptor augmentation.

Each stable region contributes a 52-bin intensity histogram and an
intensity-weighted centroid expressed in its bounding box's normalized
coordinates. A keypoint inside the region is encoded by its position
relative to the centroid, rotated so the centroid's offset from the box
center defines the reference direction; this keeps the two extra coordinates
stable when the whole region rotates. The fused descriptor is the base
vector with the weighted histogram and relative position appended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateRegionError, InvalidParameterError
from .features import Keypoint
from .imaging import GrayImage
from .mser import Region

__all__ = [
    "HIST_BINS",
    "FUSED_EXTRA_DIM",
    "RegionSignature",
    "FusedDescriptor",
    "region_histogram",
    "normalize_coords",
    "centroid_orientation",
    "relative_position",
    "region_signature",
    "fuse",
    "default_weights",
    "write_fused_descriptors",
]

# Bins 0..50 cover five intensity levels each; 255 gets its own bin so the
# top bin is not six levels wide.
HIST_BINS = 52
FUSED_EXTRA_DIM = HIST_BINS + 2

# (alpha1, alpha2) per descriptor family: histogram and position weights.
_DEFAULT_WEIGHTS: dict[str, tuple[float, float]] = {
    "builtin_grad": (600.0, 300.0),
    "sift": (600.0, 300.0),
    "surf": (0.3, 0.1),
    "orb": (10.0, 40.0),
    "akaze": (10.0, 60.0),
    "brisk": (10.0, 60.0),
}


@dataclass(frozen=True)
class RegionSignature:
    """Per-region data reused by every keypoint the region contains."""

    histogram: np.ndarray
    centroid: tuple[float, float]
    theta: float
    bbox: tuple[int, int, int, int]


@dataclass(frozen=True)
class FusedDescriptor:
    """Base descriptor with region slots appended.

    ``has_region`` is False when the keypoint lay in no stable region; the
    extra 54 values are then zero, which keeps fused distances equal to base
    distances between two such descriptors.
    """

    values: np.ndarray
    base_dim: int
    has_region: bool


def region_histogram(region: Region, img: GrayImage) -> np.ndarray:
    """Area-normalized 52-bin intensity histogram over the region's pixels."""
    if region.pixels.size == 0:
        raise DegenerateRegionError("region has no pixels")
    values = img.pixels.reshape(-1)[region.pixels]
    hist = np.bincount(values // 5, minlength=HIST_BINS).astype(np.float64)
    return hist / region.area


def normalize_coords(bbox: tuple[int, int, int, int], x: float, y: float) -> tuple[float, float]:
    """Map image coordinates into the box's unit square.

    Raises DegenerateRegionError when the box has zero width or height.
    """
    min_x, min_y, max_x, max_y = bbox
    if max_x <= min_x or max_y <= min_y:
        raise DegenerateRegionError(f"degenerate bounding box {bbox}")
    return (x - min_x) / (max_x - min_x), (y - min_y) / (max_y - min_y)


def centroid_orientation(region: Region, img: GrayImage) -> tuple[tuple[float, float], float]:
    """Intensity-weighted centroid in normalized box coordinates, and the
    angle of its offset from the box center (0.5, 0.5).

    Raises DegenerateRegionError for a degenerate box or zero total
    intensity (no mass to take moments of).
    """
    min_x, min_y, max_x, max_y = region.bbox
    if max_x <= min_x or max_y <= min_y:
        raise DegenerateRegionError(f"degenerate bounding box {region.bbox}")
    w = img.width
    ys, xs = np.divmod(region.pixels, w)
    nx = (xs - min_x) / (max_x - min_x)
    ny = (ys - min_y) / (max_y - min_y)
    weights = img.pixels.reshape(-1)[region.pixels].astype(np.float64)
    m00 = weights.sum()
    if m00 <= 0:
        raise DegenerateRegionError("region has zero total intensity")
    cx = float((nx * weights).sum() / m00)
    cy = float((ny * weights).sum() / m00)
    theta = math.atan2(cy - 0.5, cx - 0.5)
    return (cx, cy), theta


def region_signature(region: Region, img: GrayImage) -> RegionSignature:
    """Histogram, centroid and orientation bundled for reuse."""
    centroid, theta = centroid_orientation(region, img)
    return RegionSignature(
        histogram=region_histogram(region, img),
        centroid=centroid,
        theta=theta,
        bbox=region.bbox,
    )


def relative_position(sig: RegionSignature, x: float, y: float) -> tuple[float, float]:
    """Keypoint offset from the region centroid, expressed in the region's
    own frame (normalized box coordinates rotated by -theta)."""
    nx, ny = normalize_coords(sig.bbox, x, y)
    px = nx - sig.centroid[0]
    py = ny - sig.centroid[1]
    c, s = math.cos(sig.theta), math.sin(sig.theta)
    return c * px + s * py, -s * px + c * py


def fuse(
    base: np.ndarray,
    sig: RegionSignature | None,
    relpos: tuple[float, float] | None,
    alpha1: float,
    alpha2: float,
) -> FusedDescriptor:
    """Append weighted region slots to a base descriptor.

    With no signature the 54 extra slots stay zero and ``has_region`` is
    False.
    """
    base = np.asarray(base, dtype=np.float64)
    extra = np.zeros(FUSED_EXTRA_DIM)
    has_region = sig is not None
    if sig is not None:
        if relpos is None:
            raise ConfigurationError("relative position required when a signature is given")
        extra[:HIST_BINS] = alpha1 * sig.histogram
        extra[HIST_BINS:] = alpha2 * np.asarray(relpos)
    return FusedDescriptor(
        values=np.concatenate([base, extra]),
        base_dim=base.shape[0],
        has_region=has_region,
    )


def default_weights(family: str) -> tuple[float, float]:
    """Suggested (alpha1, alpha2) for a descriptor family.

    Unknown families raise ConfigurationError; pass explicit weights for
    those.
    """
    try:
        return _DEFAULT_WEIGHTS[family]
    except KeyError:
        raise ConfigurationError(
            f"no default weights for descriptor family {family!r}; "
            "set alpha1/alpha2 explicitly"
        )


def write_fused_descriptors(
    path: str | Path,
    keypoints: Sequence[Keypoint],
    fused: Sequence[FusedDescriptor],
    *,
    base_dim: int,
    alpha1: float,
    alpha2: float,
    family: str = "builtin_grad",
) -> None:
    """Write fused descriptors in the plain-text interchange format.

    The header states the fused dimension, and a comment line records the
    weights and the base family so a reader can split the vector back into
    its parts. The file loads with the same reader as plain exports.
    """
    if len(keypoints) != len(fused):
        raise InvalidParameterError(
            f"{len(keypoints)} keypoints but {len(fused)} descriptors"
        )
    dim = base_dim + FUSED_EXTRA_DIM
    lines = [
        f"DESC {dim}",
        f"# fused alpha1={alpha1:.9g} alpha2={alpha2:.9g} base={family}",
    ]
    for kp, fd in zip(keypoints, fused):
        if fd.values.shape[0] != dim:
            raise InvalidParameterError(
                f"fused descriptor has {fd.values.shape[0]} values, expected {dim}"
            )
        head = f"{kp.x:.9g} {kp.y:.9g} {kp.scale:.9g} {kp.angle:.9g}"
        body = " ".join(f"{v:.9g}" for v in fd.values)
        lines.append(f"{head} {body}")
    Path(path).write_text("\n".join(lines) + "\n")
