"""End-to-end matching pipeline.

For a pair of images: decide which one carries the lower affine degree,
simulate the appropriate tilt set on each side, enhance the originals,
segment them into stable regions, describe keypoints from every simulated
view in original coordinates, augment each descriptor with its region's
signature, and run ratio-test matching over the pooled views. External
descriptor sets can replace the built-in detector, in which case simulation
is skipped (their features exist only on the original frames) but region
augmentation still applies.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .affine_sim import PAPER_SETS, SamplingSets, classify_affine_pair, simulate_views
from .errors import ClassificationFailedError, ConfigurationError
from .features import BINARY_FAMILIES, FeatureSet, detect_and_describe
from .imaging import EnhanceParams, GrayImage, enhance, round_half_up
from .matching import Match, dedupe, knn_match, knn_match_hamming_mix
from .mser import MserParams, RegionMap, mser_segment
from .region_desc import (
    FUSED_EXTRA_DIM,
    HIST_BINS,
    RegionSignature,
    default_weights,
    region_signature,
    relative_position,
)
from .errors import DegenerateRegionError

logger = logging.getLogger(__name__)

__all__ = ["AugmentedFeatures", "build_augmented_features", "match_pipeline"]


@dataclass
class AugmentedFeatures:
    """Pooled per-keypoint arrays for one image across all its views.

    ``points`` are original-frame coordinates; ``extra`` already carries the
    alpha weights so matching is a plain distance computation.
    """

    points: np.ndarray
    base: np.ndarray
    extra: np.ndarray
    has_region: np.ndarray
    view_ids: np.ndarray
    family: str

    def __len__(self) -> int:
        return len(self.points)


def _signatures(rmap: RegionMap, img: GrayImage) -> dict[int, RegionSignature]:
    sigs: dict[int, RegionSignature] = {}
    for ident, region in rmap.regions.items():
        try:
            sigs[ident] = region_signature(region, img)
        except DegenerateRegionError as exc:
            logger.debug("region %d has no usable signature: %s", ident, exc)
    return sigs


def _region_ids_at(rmap: RegionMap, pts: np.ndarray) -> np.ndarray:
    """Vectorized region lookup with the same rounding as region_at."""
    ids = np.zeros(len(pts), dtype=np.int64)
    if len(pts) == 0:
        return ids
    px = round_half_up(pts[:, 0]).astype(np.int64)
    py = round_half_up(pts[:, 1]).astype(np.int64)
    inside = (px >= 0) & (px < rmap.width) & (py >= 0) & (py < rmap.height)
    ids[inside] = rmap.label[py[inside], px[inside]]
    return ids


def build_augmented_features(
    img: GrayImage,
    tilts: list[float],
    phis: list[float] | None = None,
    *,
    alpha1: float,
    alpha2: float,
    enhance_params: EnhanceParams | None = None,
    mser_params: MserParams | None = None,
    external: FeatureSet | None = None,
) -> AugmentedFeatures:
    """Detect, describe and region-augment features for one image.

    ``tilts`` lists the affine quantities to simulate (the identity view is
    always included); pass an empty list for unsimulated matching. With an
    ``external`` feature set its keypoints and descriptors are used as-is and
    no views are simulated.
    """
    enhanced = enhance(img, enhance_params or EnhanceParams())
    rmap = mser_segment(enhanced, mser_params)
    sigs = _signatures(rmap, enhanced)

    point_blocks: list[np.ndarray] = []
    base_blocks: list[np.ndarray] = []
    view_blocks: list[np.ndarray] = []
    family = "builtin_grad"

    if external is not None:
        family = external.family
        pts = np.array([[kp.x, kp.y] for kp in external.keypoints], dtype=np.float64)
        pts = pts.reshape(-1, 2)
        point_blocks.append(pts)
        base_blocks.append(np.asarray(external.descriptors, dtype=np.float32))
        view_blocks.append(np.zeros(len(pts), dtype=np.int64))
    else:
        views = simulate_views(enhanced, tilts, phis if tilts else [])
        w, h = img.width, img.height
        for view in views:
            feats = detect_and_describe(view.image)
            if not feats.keypoints:
                continue
            local = np.array([[kp.x, kp.y] for kp in feats.keypoints])
            m = view.to_original
            orig = local @ m[:, :2].T + m[:, 2]
            inside = (
                (orig[:, 0] >= -0.5)
                & (orig[:, 0] < w - 0.5)
                & (orig[:, 1] >= -0.5)
                & (orig[:, 1] < h - 0.5)
            )
            if not inside.any():
                continue
            point_blocks.append(orig[inside])
            base_blocks.append(feats.descriptors[inside])
            view_blocks.append(np.full(int(inside.sum()), view.view_id, dtype=np.int64))

    if point_blocks:
        points = np.concatenate(point_blocks)
        base = np.concatenate(base_blocks)
        view_ids = np.concatenate(view_blocks)
    else:
        points = np.zeros((0, 2))
        base = np.zeros((0, 0), dtype=np.float32)
        view_ids = np.zeros(0, dtype=np.int64)

    extra = np.zeros((len(points), FUSED_EXTRA_DIM), dtype=np.float32)
    has_region = np.zeros(len(points), dtype=bool)
    ids = _region_ids_at(rmap, points)
    for i in np.flatnonzero(ids):
        sig = sigs.get(int(ids[i]))
        if sig is None:
            continue
        try:
            rx, ry = relative_position(sig, points[i, 0], points[i, 1])
        except DegenerateRegionError:
            continue
        extra[i, :HIST_BINS] = alpha1 * sig.histogram
        extra[i, HIST_BINS:] = (alpha2 * rx, alpha2 * ry)
        has_region[i] = True

    return AugmentedFeatures(
        points=points,
        base=base,
        extra=extra,
        has_region=has_region,
        view_ids=view_ids,
        family=family,
    )


def _choose_tilts(
    img_a: GrayImage,
    img_b: GrayImage,
    theta: float,
    ratio: float,
    sets: SamplingSets,
) -> tuple[list[float], list[float]]:
    try:
        order = classify_affine_pair(img_a, img_b, theta=theta, ratio=ratio)
    except ClassificationFailedError as exc:
        logger.warning("affine classification failed (%s); using enlarging sets", exc)
        order = "tie"
    if order == "a_lower":
        return list(sets.enlarging), list(sets.reducing)
    if order == "b_lower":
        return list(sets.reducing), list(sets.enlarging)
    return list(sets.enlarging), list(sets.enlarging)


def match_pipeline(
    img_a: GrayImage,
    img_b: GrayImage,
    *,
    ratio: float = 0.8,
    alpha1: float | None = None,
    alpha2: float | None = None,
    simulation: bool = True,
    theta: float = math.pi / 4,
    sets: SamplingSets = PAPER_SETS,
    enhance_params: EnhanceParams | None = None,
    mser_params: MserParams | None = None,
    external_a: FeatureSet | None = None,
    external_b: FeatureSet | None = None,
) -> list[Match]:
    """Match two images end to end; returns deduplicated correspondences.

    Featureless inputs yield an empty list (with a logged diagnostic), not
    an error. Supplying only one of the two external sets is a
    configuration error, as is mixing descriptor families.
    """
    if (external_a is None) != (external_b is None):
        raise ConfigurationError("external descriptors must be given for both images")
    if external_a is not None and external_b is not None:
        if external_a.family != external_b.family:
            raise ConfigurationError(
                f"descriptor families differ: {external_a.family!r} vs {external_b.family!r}"
            )
        if external_a.descriptors.shape[1] != external_b.descriptors.shape[1]:
            raise ConfigurationError("descriptor dimensions differ between sides")

    family = external_a.family if external_a is not None else "builtin_grad"
    if alpha1 is None or alpha2 is None:
        d1, d2 = default_weights(family)
        alpha1 = d1 if alpha1 is None else alpha1
        alpha2 = d2 if alpha2 is None else alpha2

    if external_a is not None or not simulation:
        tilts_a: list[float] = []
        tilts_b: list[float] = []
    else:
        tilts_a, tilts_b = _choose_tilts(img_a, img_b, theta, ratio, sets)

    phis = list(sets.phis)
    feats_a = build_augmented_features(
        img_a, tilts_a, phis,
        alpha1=alpha1, alpha2=alpha2,
        enhance_params=enhance_params, mser_params=mser_params,
        external=external_a,
    )
    feats_b = build_augmented_features(
        img_b, tilts_b, phis,
        alpha1=alpha1, alpha2=alpha2,
        enhance_params=enhance_params, mser_params=mser_params,
        external=external_b,
    )

    if len(feats_a) == 0 or len(feats_b) < 2:
        logger.info(
            "not enough descriptors to match (%d query, %d database)",
            len(feats_a), len(feats_b),
        )
        return []

    if family in BINARY_FAMILIES:
        raw = knn_match_hamming_mix(
            feats_a.base, feats_a.extra, feats_b.base, feats_b.extra, ratio
        )
    elif not (feats_a.extra.any() or feats_b.extra.any()):
        # All-zero region parts (zero weights, or nothing segmented) change no
        # distance, but padding the matrices would regroup the distance sums
        # and shift last-ulp bits; dropping the block keeps base matching
        # bit-identical.
        raw = knn_match(feats_a.base, feats_b.base, ratio)
    else:
        fused_a = np.hstack([feats_a.base, feats_a.extra])
        fused_b = np.hstack([feats_b.base, feats_b.extra])
        raw = knn_match(fused_a, fused_b, ratio)

    matches = [
        Match(
            ax=float(feats_a.points[i, 0]),
            ay=float(feats_a.points[i, 1]),
            bx=float(feats_b.points[j, 0]),
            by=float(feats_b.points[j, 1]),
            distance=dist,
            view_a=int(feats_a.view_ids[i]),
            view_b=int(feats_b.view_ids[j]),
        )
        for i, j, dist in raw
    ]
    return dedupe(matches)
