"""Region signatures, descriptor fusion, and the fused interchange export."""

from __future__ import annotations

import math

import numpy as np
import pytest

from regionfeat import (
    ConfigurationError,
    DegenerateRegionError,
    FUSED_EXTRA_DIM,
    GrayImage,
    HIST_BINS,
    InvalidParameterError,
    Region,
    RegionSignature,
    centroid_orientation,
    default_weights,
    fuse,
    normalize_coords,
    region_histogram,
    region_signature,
    relative_position,
    write_fused_descriptors,
)
from regionfeat.errors import ParseError
from regionfeat.features import Keypoint, load_external_descriptors
from regionfeat.imaging import invert_affine, warp_affine
from conftest import region_from_mask


def box_mask(shape: tuple[int, int], x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    mask[y0 : y1 + 1, x0 : x1 + 1] = True
    return mask


# ---------------------------------------------------------------- histogram


def test_histogram_binning_and_normalization():
    # Values 0 and 4 share bin 0, 5 opens bin 1, 254 is still bin 50, and
    # 255 sits alone in bin 51.
    px = np.zeros((3, 4), dtype=np.uint8)
    px[0, :3] = (0, 4, 5)
    px[1, :3] = (250, 254, 255)
    img = GrayImage(px)
    mask = np.zeros((3, 4), dtype=bool)
    mask[0, :3] = True
    mask[1, :3] = True
    hist = region_histogram(region_from_mask(mask, img), img)

    assert hist.shape == (HIST_BINS,)
    expected = np.zeros(HIST_BINS)
    expected[0] = 2 / 6
    expected[1] = 1 / 6
    expected[50] = 2 / 6
    expected[51] = 1 / 6
    np.testing.assert_array_equal(hist, expected)
    assert hist.sum() == pytest.approx(1.0, abs=1e-12)


def test_histogram_empty_region_raises():
    img = GrayImage(np.zeros((4, 4), dtype=np.uint8))
    empty = Region(
        ident=1, pixels=np.array([], dtype=np.int64), area=0,
        bbox=(0, 0, 0, 0), mean_intensity=0.0, level=0,
        polarity="dark", stability=0.0,
    )
    with pytest.raises(DegenerateRegionError):
        region_histogram(empty, img)


def test_histogram_exact_under_90_degree_rotation():
    rng = np.random.default_rng(7)
    img = GrayImage(rng.integers(0, 256, (12, 15)).astype(np.uint8))
    mask = np.zeros((12, 15), dtype=bool)
    mask[2:9, 3:8] = True
    mask[2:5, 8:12] = True

    rot_img = GrayImage(np.rot90(img.pixels).copy())
    rot_mask = np.rot90(mask).copy()

    h_a = region_histogram(region_from_mask(mask, img), img)
    h_b = region_histogram(region_from_mask(rot_mask, rot_img), rot_img)
    np.testing.assert_array_equal(h_a, h_b)


def test_histogram_stable_under_tilt_warp():
    # An affine warp moves pixels but barely changes their values, so the
    # histogram should survive a t=2 compression nearly unchanged. The
    # drift all comes from the boundary band, so the region must be large
    # relative to its perimeter.
    yy, xx = np.mgrid[0:240, 0:340]
    ellipse = ((xx - 170) / 150.0) ** 2 + ((yy - 120) / 100.0) ** 2 <= 1.0
    px = np.full((240, 340), 40, dtype=np.uint8)
    px[ellipse] = 180
    img = GrayImage(px)

    tilt = np.array([[0.5, 0.0, 0.0], [0.0, 1.0, 0.0]])
    warped, inverse = warp_affine(img, tilt)
    forward = invert_affine(inverse)

    ys, xs = np.nonzero(ellipse)
    pts = np.stack([xs, ys], axis=1).astype(np.float64)
    mapped = pts @ forward[:, :2].T + forward[:, 2]
    mx = np.clip(np.round(mapped[:, 0]).astype(int), 0, warped.width - 1)
    my = np.clip(np.round(mapped[:, 1]).astype(int), 0, warped.height - 1)
    warped_mask = np.zeros((warped.height, warped.width), dtype=bool)
    warped_mask[my, mx] = True

    h_orig = region_histogram(region_from_mask(ellipse, img), img)
    h_warp = region_histogram(region_from_mask(warped_mask, warped), warped)
    assert np.abs(h_orig - h_warp).sum() < 0.15


# ---------------------------------------------------- normalized coordinates


def test_normalize_coords_maps_box_to_unit_square():
    assert normalize_coords((10, 20, 30, 60), 15, 50) == (0.25, 0.75)
    assert normalize_coords((10, 20, 30, 60), 10, 20) == (0.0, 0.0)
    assert normalize_coords((10, 20, 30, 60), 30, 60) == (1.0, 1.0)


@pytest.mark.parametrize("bbox", [(5, 5, 5, 9), (5, 5, 9, 5), (5, 5, 5, 5)])
def test_normalize_coords_degenerate_box_raises(bbox):
    with pytest.raises(DegenerateRegionError):
        normalize_coords(bbox, 5, 5)


# ------------------------------------------------------- centroid and theta


def test_centroid_of_uniform_box_is_center():
    img = GrayImage(np.full((20, 20), 100, dtype=np.uint8))
    region = region_from_mask(box_mask((20, 20), 4, 6, 13, 15), img)
    (cx, cy), theta = centroid_orientation(region, img)
    assert cx == pytest.approx(0.5, abs=1e-12)
    assert cy == pytest.approx(0.5, abs=1e-12)
    assert theta == 0.0


def test_centroid_follows_the_mass():
    px = np.zeros((20, 20), dtype=np.uint8)
    px[15, 13] = 200
    img = GrayImage(px)
    region = region_from_mask(box_mask((20, 20), 4, 6, 13, 15), img)
    (cx, cy), theta = centroid_orientation(region, img)
    assert (cx, cy) == (1.0, 1.0)
    assert theta == pytest.approx(math.pi / 4, abs=1e-12)


def test_centroid_zero_intensity_raises():
    img = GrayImage(np.zeros((10, 10), dtype=np.uint8))
    region = region_from_mask(box_mask((10, 10), 2, 2, 7, 7), img)
    with pytest.raises(DegenerateRegionError):
        centroid_orientation(region, img)


def test_centroid_degenerate_box_raises():
    img = GrayImage(np.full((10, 10), 50, dtype=np.uint8))
    region = region_from_mask(box_mask((10, 10), 3, 2, 3, 7), img)
    with pytest.raises(DegenerateRegionError):
        centroid_orientation(region, img)


# -------------------------------------------------------- relative position


def sig_with(centroid, theta, bbox=(0, 0, 10, 10)) -> RegionSignature:
    return RegionSignature(
        histogram=np.zeros(HIST_BINS), centroid=centroid, theta=theta, bbox=bbox,
    )


def test_relative_position_zero_theta_is_plain_offset():
    sig = sig_with((0.4, 0.6), 0.0)
    rx, ry = relative_position(sig, 7.0, 8.0)
    assert rx == pytest.approx(0.3, abs=1e-12)
    assert ry == pytest.approx(0.2, abs=1e-12)


def test_relative_position_aligns_with_region_frame():
    # A keypoint offset along the centroid's own reference direction lands
    # on the +x axis of the region frame.
    theta = math.pi / 3
    sig = sig_with((0.5, 0.5), theta)
    x = 10 * (0.5 + 0.2 * math.cos(theta))
    y = 10 * (0.5 + 0.2 * math.sin(theta))
    rx, ry = relative_position(sig, x, y)
    assert rx == pytest.approx(0.2, abs=1e-12)
    assert ry == pytest.approx(0.0, abs=1e-12)


def test_signature_and_relpos_invariant_under_90_degree_rotation():
    rng = np.random.default_rng(11)
    px = rng.integers(30, 220, (24, 18)).astype(np.uint8)
    img = GrayImage(px)
    mask = np.zeros((24, 18), dtype=bool)
    mask[4:17, 3:9] = True
    mask[4:8, 9:14] = True

    # np.rot90 maps (x, y) -> (y, width-1-x).
    w = img.width
    rot_img = GrayImage(np.rot90(img.pixels).copy())
    rot_mask = np.rot90(mask).copy()

    sig_a = region_signature(region_from_mask(mask, img), img)
    sig_b = region_signature(region_from_mask(rot_mask, rot_img), rot_img)

    np.testing.assert_array_equal(sig_a.histogram, sig_b.histogram)
    assert sig_b.centroid[0] == pytest.approx(sig_a.centroid[1], abs=1e-12)
    assert sig_b.centroid[1] == pytest.approx(1 - sig_a.centroid[0], abs=1e-12)
    dtheta = (sig_b.theta - sig_a.theta + math.pi / 2 + math.pi) % (2 * math.pi) - math.pi
    assert dtheta == pytest.approx(0.0, abs=1e-12)

    for kx, ky in [(5.2, 6.7), (8.0, 12.5), (10.9, 5.1)]:
        ra = relative_position(sig_a, kx, ky)
        rb = relative_position(sig_b, ky, w - 1 - kx)
        assert rb[0] == pytest.approx(ra[0], abs=1e-12)
        assert rb[1] == pytest.approx(ra[1], abs=1e-12)


# ------------------------------------------------------------------- fusion


def test_fuse_without_signature_zero_pads():
    base = np.arange(128, dtype=np.float32)
    fd = fuse(base, None, None, 600.0, 300.0)
    assert fd.values.shape == (128 + FUSED_EXTRA_DIM,)
    assert fd.base_dim == 128
    assert not fd.has_region
    np.testing.assert_array_equal(fd.values[:128], base.astype(np.float64))
    assert not fd.values[128:].any()


def test_fuse_zero_alphas_keep_extras_zero():
    sig = sig_with((0.4, 0.4), 0.3)
    sig = RegionSignature(
        histogram=np.full(HIST_BINS, 1.0 / HIST_BINS),
        centroid=sig.centroid, theta=sig.theta, bbox=sig.bbox,
    )
    fd = fuse(np.ones(8), sig, (0.1, -0.2), 0.0, 0.0)
    assert fd.has_region
    assert not fd.values[8:].any()


def test_fuse_signature_without_relpos_raises():
    sig = sig_with((0.4, 0.4), 0.0)
    with pytest.raises(ConfigurationError):
        fuse(np.ones(8), sig, None, 1.0, 1.0)


def test_fuse_weighted_parts():
    # A unit-sum histogram scaled by alpha1 = 600 contributes slots that
    # sum back to 600; the two position slots carry alpha2 times the offset.
    hist = np.zeros(HIST_BINS)
    hist[3] = 0.25
    hist[17] = 0.5
    hist[51] = 0.25
    sig = RegionSignature(histogram=hist, centroid=(0.5, 0.5), theta=0.0,
                          bbox=(0, 0, 10, 10))
    fd = fuse(np.zeros(128), sig, (0.125, -0.25), 600.0, 300.0)
    assert fd.values[128 : 128 + HIST_BINS].sum() == pytest.approx(600.0, abs=1e-6)
    assert fd.values[128 + HIST_BINS] == pytest.approx(300.0 * 0.125, abs=1e-12)
    assert fd.values[129 + HIST_BINS] == pytest.approx(300.0 * -0.25, abs=1e-12)


def test_fusion_distance_linearity():
    rng = np.random.default_rng(3)
    h1 = rng.dirichlet(np.ones(HIST_BINS))
    h2 = rng.dirichlet(np.ones(HIST_BINS))
    s1 = RegionSignature(histogram=h1, centroid=(0.4, 0.5), theta=0.2, bbox=(0, 0, 9, 9))
    s2 = RegionSignature(histogram=h2, centroid=(0.6, 0.5), theta=-0.4, bbox=(0, 0, 9, 9))
    b1 = rng.uniform(0, 256, 128)
    b2 = rng.uniform(0, 256, 128)
    p1, p2 = (0.12, -0.08), (-0.3, 0.22)
    a1, a2 = 600.0, 300.0

    f1 = fuse(b1, s1, p1, a1, a2)
    f2 = fuse(b2, s2, p2, a1, a2)
    lhs = ((f1.values - f2.values) ** 2).sum()
    rhs = (
        ((b1 - b2) ** 2).sum()
        + a1**2 * ((h1 - h2) ** 2).sum()
        + a2**2 * ((np.array(p1) - np.array(p2)) ** 2).sum()
    )
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize(
    "family,weights",
    [
        ("builtin_grad", (600.0, 300.0)),
        ("sift", (600.0, 300.0)),
        ("surf", (0.3, 0.1)),
        ("orb", (10.0, 40.0)),
        ("akaze", (10.0, 60.0)),
        ("brisk", (10.0, 60.0)),
    ],
)
def test_default_weights_table(family, weights):
    assert default_weights(family) == weights


def test_default_weights_unknown_family_raises():
    with pytest.raises(ConfigurationError):
        default_weights("freak")


# ------------------------------------------------------------- fused export


def test_write_fused_descriptors_roundtrip(tmp_path):
    hist = np.zeros(HIST_BINS)
    hist[5] = 1.0
    sig = RegionSignature(histogram=hist, centroid=(0.25, 0.75), theta=0.5,
                          bbox=(0, 0, 20, 20))
    kps = [
        Keypoint(x=1.5, y=2.25, scale=2.0, angle=0.75),
        Keypoint(x=10.0, y=4.5, scale=3.5, angle=5.0),
    ]
    fused = [
        fuse(np.arange(4, dtype=np.float64), sig, (0.1, 0.2), 600.0, 300.0),
        fuse(np.full(4, 7.0), None, None, 600.0, 300.0),
    ]
    out = tmp_path / "fused.txt"
    write_fused_descriptors(out, kps, fused, base_dim=4, alpha1=600.0, alpha2=300.0)

    lines = out.read_text().splitlines()
    assert lines[0] == f"DESC {4 + FUSED_EXTRA_DIM}"
    assert lines[1] == "# fused alpha1=600 alpha2=300 base=builtin_grad"
    assert len(lines) == 4

    loaded = load_external_descriptors(out)
    assert loaded.family == "external"
    assert loaded.descriptors.shape == (2, 4 + FUSED_EXTRA_DIM)
    assert loaded.keypoints[0].x == pytest.approx(1.5)
    assert loaded.keypoints[1].angle == pytest.approx(5.0)
    np.testing.assert_allclose(
        loaded.descriptors[0], fused[0].values.astype(np.float32), rtol=1e-6
    )
    np.testing.assert_allclose(
        loaded.descriptors[1], fused[1].values.astype(np.float32), rtol=1e-6
    )


def test_write_fused_descriptors_empty_set(tmp_path):
    out = tmp_path / "empty.txt"
    write_fused_descriptors(out, [], [], base_dim=128, alpha1=1.0, alpha2=2.0)
    loaded = load_external_descriptors(out)
    assert len(loaded.keypoints) == 0
    assert loaded.descriptors.shape == (0, 128 + FUSED_EXTRA_DIM)


def test_write_fused_descriptors_count_mismatch(tmp_path):
    kp = Keypoint(x=1.0, y=1.0, scale=1.0, angle=0.0)
    with pytest.raises(InvalidParameterError):
        write_fused_descriptors(tmp_path / "x.txt", [kp], [],
                                base_dim=4, alpha1=1.0, alpha2=1.0)


def test_write_fused_descriptors_dim_mismatch(tmp_path):
    kp = Keypoint(x=1.0, y=1.0, scale=1.0, angle=0.0)
    fd = fuse(np.zeros(8), None, None, 1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        write_fused_descriptors(tmp_path / "x.txt", [kp], [fd],
                                base_dim=4, alpha1=1.0, alpha2=1.0)


def test_loader_rejects_leading_comment(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("# fused alpha1=1 alpha2=1 base=builtin_grad\nDESC 4\n")
    with pytest.raises(ParseError):
        load_external_descriptors(bad)
