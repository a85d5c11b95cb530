"""Affine view simulation and affine-degree classification.

A camera tilt by angle theta forshortens one image axis by cos(theta), so a
view simulated with affine quantity t = 1/cos(theta) is produced by rotating
the image by phi and compressing the rotated x axis by 1/t. Matching two
images whose affine degrees differ works best when the low-affine image is
simulated with tilt-enlarging quantities and the high-affine image with
tilt-reducing ones; the classifier below decides which image is which by
probing both directions with a single 45-degree simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ClassificationFailedError, InvalidParameterError
from .imaging import GrayImage, warp_affine

__all__ = [
    "AffinePose",
    "SimulatedView",
    "SamplingSets",
    "PAPER_SETS",
    "ASIFT_TILTS",
    "pose_matrix",
    "tilt_from_angle",
    "simulate_views",
    "classify_affine_pair",
    "max_affine",
    "average_differ",
]


@dataclass(frozen=True)
class AffinePose:
    """Decomposed 2x2 affine map: scale * R(psi) * diag(t, 1) * R(phi).

    ``t`` is the anisotropic stretch along the (phi-rotated) x axis; values
    below 1 compress. All angles are radians.
    """

    scale: float = 1.0
    psi: float = 0.0
    t: float = 1.0
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not (self.scale > 0 and self.t > 0):
            raise InvalidParameterError("scale and t must be positive")
        if not all(map(math.isfinite, (self.scale, self.psi, self.t, self.phi))):
            raise InvalidParameterError("pose parameters must be finite")


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def pose_matrix(pose: AffinePose) -> np.ndarray:
    """Materialize a pose as its 2x2 linear map.

    The determinant is scale^2 * t by construction.
    """
    return pose.scale * (_rotation(pose.psi) @ np.diag([pose.t, 1.0]) @ _rotation(pose.phi))


def tilt_from_angle(theta: float) -> float:
    """Affine quantity t = 1/cos(theta) for a camera tilt of theta radians."""
    if not 0.0 <= theta < math.pi / 2:
        raise InvalidParameterError("theta must lie in [0, pi/2)")
    return 1.0 / math.cos(theta)


_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SamplingSets:
    """Tilt quantities applied to the low-affine (enlarging) and high-affine
    (reducing) image of a pair, plus the shared tilt-direction grid."""

    enlarging: tuple[float, ...] = (_SQRT2, 2.0, 2.0 * _SQRT2)
    reducing: tuple[float, ...] = (_SQRT2 / 2.0, 0.5, _SQRT2 / 4.0)
    phis: tuple[float, ...] = tuple(
        math.radians(d) for d in (-45.0, -30.0, -15.0, 0.0, 15.0, 30.0)
    )


PAPER_SETS = SamplingSets()

# The classic simulation schedule applies one shared enlarging set to both
# images; kept for the coverage/redundancy comparisons.
ASIFT_TILTS: tuple[float, ...] = (_SQRT2, 2.0, 2.0 * _SQRT2, 4.0, 4.0 * _SQRT2)


def max_affine(set1: Sequence[float], set2: Sequence[float]) -> float:
    """Largest relative tilt coverable by a pair of sampling sets.

    ``set1`` is simulated on the high-affine image, ``set2`` on the low-affine
    one; the reachable ratio is max(set2) / min(set1).
    """
    if not set1 or not set2:
        raise InvalidParameterError("sampling sets must be non-empty")
    return max(set2) / min(set1)


def average_differ(set1: Sequence[float], set2: Sequence[float], a: float) -> float:
    """Mean residual tilt gap for a pair whose affine quantities differ by a.

    ``set2`` is the reducing set applied to the high-affine image (intrinsic
    quantity a times the partner's), ``set1`` the enlarging set applied to the
    low-affine image: a * mean(set2) - mean(set1).
    """
    if not set1 or not set2:
        raise InvalidParameterError("sampling sets must be non-empty")
    return a * (sum(set2) / len(set2)) - sum(set1) / len(set1)


@dataclass(frozen=True)
class SimulatedView:
    """One simulated view of an image.

    ``pose`` is the image-space map that produced the view, so
    ``pose_matrix(pose)`` plus the bounding-box shift equals the applied warp
    and ``to_original`` undoes it. ``tilt`` keeps the requested affine
    quantity (the sampling-set value), which for a compression warp is the
    reciprocal of ``pose.t``.
    """

    image: GrayImage
    pose: AffinePose
    tilt: float
    phi: float
    view_id: int
    to_original: np.ndarray

    def map_to_original(self, x: float, y: float) -> tuple[float, float]:
        m = self.to_original
        return (
            m[0, 0] * x + m[0, 1] * y + m[0, 2],
            m[1, 0] * x + m[1, 1] * y + m[1, 2],
        )


def simulate_views(
    img: GrayImage,
    tilts: Sequence[float],
    phis: Sequence[float] | None = None,
) -> list[SimulatedView]:
    """Simulate one view per (tilt, phi) pair, plus the identity view.

    Every requested affine quantity t is realized as a compression of the
    phi-rotated x axis by 1/t with anti-alias pre-blur, the subsampling form
    of tilt simulation. The identity view (the untouched input, view_id 0)
    is appended last so unsimulated matching is always available.
    """
    if any(not (t > 0 and math.isfinite(t)) for t in tilts):
        raise InvalidParameterError("tilts must be positive and finite")
    phis = tuple(PAPER_SETS.phis if phis is None else phis)
    if any(not math.isfinite(p) for p in phis):
        raise InvalidParameterError("phis must be finite")

    views: list[SimulatedView] = []
    view_id = 1
    for t in tilts:
        for phi in phis:
            pose = AffinePose(scale=1.0, psi=0.0, t=1.0 / t, phi=phi)
            m = np.zeros((2, 3))
            m[:, :2] = pose_matrix(pose)
            warped, inverse = warp_affine(img, m, antialias=True)
            views.append(
                SimulatedView(
                    image=warped,
                    pose=pose,
                    tilt=float(t),
                    phi=float(phi),
                    view_id=view_id,
                    to_original=inverse,
                )
            )
            view_id += 1
    identity = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    views.append(
        SimulatedView(
            image=img,
            pose=AffinePose(),
            tilt=1.0,
            phi=0.0,
            view_id=0,
            to_original=identity,
        )
    )
    return views


def _probe_features(img: GrayImage, name: str):
    from .features import detect_and_describe

    feats = detect_and_describe(img)
    if len(feats.keypoints) < 2:
        raise ClassificationFailedError(name, "too few features to probe")
    return feats


def classify_affine_pair(
    img_a: GrayImage,
    img_b: GrayImage,
    theta: float = math.pi / 4,
    ratio: float = 0.8,
) -> str:
    """Decide which image of a pair carries the lower affine degree.

    Both images are probed with a single simulated tilt of 1/cos(theta) at
    phi = 0. Adding tilt to the low-affine image moves it toward its partner
    and yields more matches, so if matching tilt(a) against b beats matching
    a against tilt(b), image a is the low-affine one.

    Returns ``"a_lower"``, ``"b_lower"``, or ``"tie"``.

    Raises
    ------
    ClassificationFailedError
        If either image (or its probe view) produces too few features.
    """
    from .matching import knn_match

    t = tilt_from_angle(theta)
    sim_a = simulate_views(img_a, [t], [0.0])[0]
    sim_b = simulate_views(img_b, [t], [0.0])[0]

    feats_a = _probe_features(img_a, "a")
    feats_b = _probe_features(img_b, "b")
    feats_sim_a = _probe_features(sim_a.image, "a")
    feats_sim_b = _probe_features(sim_b.image, "b")

    m_sima_b = len(knn_match(feats_sim_a.descriptors, feats_b.descriptors, ratio))
    m_a_simb = len(knn_match(feats_a.descriptors, feats_sim_b.descriptors, ratio))

    if m_sima_b > m_a_simb:
        return "a_lower"
    if m_a_simb > m_sima_b:
        return "b_lower"
    return "tie"
