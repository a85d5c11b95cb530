"""Homography and epipolar evaluation, estimation, and ground-truth files."""

from __future__ import annotations

import math

import numpy as np
import pytest

from regionfeat import (
    EstimationFailedError,
    InvalidParameterError,
    Match,
    accuracy_f,
    accuracy_h,
    epsilon_for,
    estimate_h_ransac,
    fundamental_from_pose,
    h_precision,
    jacobi_eigh,
    match_correct_h,
    project_h,
    read_camera_file,
    read_homography_file,
    relative_pose,
    symmetric_epipolar_distance,
)
from regionfeat.errors import ParseError

H_EXAMPLE = np.array(
    [
        [1.02, 0.013, 3.0],
        [-0.004, 0.97, -2.0],
        [1.0e-5, -2.0e-5, 1.0],
    ]
)


def mk(ax, ay, bx, by, d=1.0):
    return Match(ax=ax, ay=ay, bx=bx, by=by, distance=d)


def grid_matches(h: np.ndarray, n_side: int = 5, span: float = 400.0):
    xs = np.linspace(20.0, span, n_side)
    pts = np.array([[x, y] for x in xs for y in xs])
    proj = project_h(h, pts)
    return [mk(a[0], a[1], b[0], b[1]) for a, b in zip(pts, proj)]


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.05, 0.4)
    k = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def stereo_rig(seed: int, n_points: int = 50):
    """Two calibrated views of random points, plus exact pixel matches."""
    rng = np.random.default_rng(seed)
    k1 = np.array([[700.0, 0.0, 320.0], [0.0, 700.0, 240.0], [0.0, 0.0, 1.0]])
    k2 = np.array([[650.0, 0.0, 310.0], [0.0, 660.0, 250.0], [0.0, 0.0, 1.0]])
    r = random_rotation(rng)
    t = rng.normal(size=3)
    t /= np.linalg.norm(t)
    pts3d = np.column_stack(
        [rng.uniform(-2, 2, n_points), rng.uniform(-1.5, 1.5, n_points),
         rng.uniform(6, 12, n_points)]
    )
    x1 = pts3d @ k1.T
    x1 = x1[:, :2] / x1[:, 2:]
    cam2 = pts3d @ r.T + t
    x2 = cam2 @ k2.T
    x2 = x2[:, :2] / x2[:, 2:]
    matches = [mk(a[0], a[1], b[0], b[1]) for a, b in zip(x1, x2)]
    return k1, k2, r, t, matches


# ------------------------------------------------------------ eigensolver


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_jacobi_reconstructs_symmetric_matrix(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(9, 9))
    a = (m + m.T) / 2
    w, v = jacobi_eigh(a)
    assert np.linalg.norm((v * w) @ v.T - a) < 1e-10
    assert np.linalg.norm(v.T @ v - np.eye(9)) < 1e-12
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-9)


def test_jacobi_handles_diagonal_input():
    w, v = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_allclose(w, [-1.0, 2.0, 3.0])
    assert np.linalg.norm(np.abs(v) - np.eye(3)[:, [1, 2, 0]]) < 1e-14


@pytest.mark.parametrize(
    "bad",
    [
        np.zeros((2, 3)),
        np.array([[1.0, 2.0], [3.0, 4.0]]),
        np.array([[np.nan, 0.0], [0.0, 1.0]]),
    ],
)
def test_jacobi_rejects_bad_input(bad):
    with pytest.raises(InvalidParameterError):
        jacobi_eigh(bad)


# -------------------------------------------------------------- thresholds


def test_epsilon_for_matches_formula():
    assert epsilon_for(800, 640) == pytest.approx(0.003 * math.hypot(800, 640), abs=1e-12)
    assert epsilon_for(1000, 1000) == pytest.approx(4.2426, abs=1e-4)


@pytest.mark.parametrize("w,h", [(0, 100), (100, 0), (-5, 10)])
def test_epsilon_for_rejects_bad_dims(w, h):
    with pytest.raises(InvalidParameterError):
        epsilon_for(w, h)


# ------------------------------------------------------- match correctness


def test_match_correct_identity_cases():
    eye = np.eye(3)
    assert match_correct_h(mk(10, 20, 10, 20), eye, 1.0)
    # The comparison is strict, so a distance exactly at eps fails.
    assert not match_correct_h(mk(10, 20, 11, 20), eye, 1.0)
    assert match_correct_h(mk(10, 20, 10.999, 20), eye, 1.0)


def test_match_sent_to_infinity_is_incorrect():
    h = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, -5.0]])
    assert not match_correct_h(mk(5.0, 3.0, 5.0, 3.0), h, 100.0)


def test_match_correct_under_synthetic_h():
    pts = np.array([[x, y] for x in (50, 150, 250) for y in (40, 140)])
    proj = project_h(H_EXAMPLE, pts)
    eps = epsilon_for(320, 240)
    for a, b in zip(pts, proj):
        jittered = mk(a[0], a[1], b[0] + 0.4 * eps, b[1] + 0.2 * eps)
        assert match_correct_h(jittered, H_EXAMPLE, eps)


def test_accuracy_h_counts_and_empty():
    eye = np.eye(3)
    matches = [
        mk(0, 0, 0, 0),
        mk(10, 10, 10.2, 10.0),
        mk(20, 20, 28.0, 20.0),
        mk(30, 30, 30.0, 39.0),
    ]
    report = accuracy_h(matches, eye, 1.0)
    assert (report.n_matches, report.n_correct) == (4, 2)
    assert report.accuracy == 0.5
    assert report.threshold == 1.0

    empty = accuracy_h([], eye, 1.0)
    assert (empty.n_matches, empty.n_correct, empty.accuracy) == (0, 0, 0.0)


def test_accuracy_h_equals_per_match_recount():
    rng = np.random.default_rng(5)
    eps = epsilon_for(500, 400)
    matches = []
    pts = rng.uniform(0, 450, (60, 2))
    proj = project_h(H_EXAMPLE, pts)
    for a, b in zip(pts, proj):
        noise = rng.normal(0, eps, 2)
        matches.append(mk(a[0], a[1], b[0] + noise[0], b[1] + noise[1]))
    report = accuracy_h(matches, H_EXAMPLE, eps)
    recount = sum(match_correct_h(m, H_EXAMPLE, eps) for m in matches)
    assert report.n_correct == recount
    assert report.accuracy == recount / len(matches)


# ----------------------------------------------------- homography fitting


def test_ransac_recovers_exact_homography():
    matches = grid_matches(H_EXAMPLE)
    h, inliers = estimate_h_ransac(matches, inlier_eps=1.0)
    assert np.linalg.norm(h - H_EXAMPLE) / np.linalg.norm(H_EXAMPLE) < 1e-4
    assert len(inliers) == len(matches)


def test_ransac_minimal_sample():
    pts = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0]])
    proj = project_h(H_EXAMPLE, pts)
    matches = [mk(a[0], a[1], b[0], b[1]) for a, b in zip(pts, proj)]
    h, inliers = estimate_h_ransac(matches, inlier_eps=0.5)
    assert len(inliers) == 4
    assert np.linalg.norm(h - H_EXAMPLE) / np.linalg.norm(H_EXAMPLE) < 1e-6


def test_ransac_rejects_half_outliers():
    rng = np.random.default_rng(7)
    inlier_matches = grid_matches(H_EXAMPLE, n_side=6, span=450.0)
    outliers = [
        mk(x, y, u, v)
        for x, y, u, v in rng.uniform(0, 450, (len(inlier_matches), 4))
    ]
    matches = inlier_matches + outliers
    h, inliers = estimate_h_ransac(matches, inlier_eps=1.0)
    assert np.linalg.norm(h - H_EXAMPLE) / np.linalg.norm(H_EXAMPLE) < 1e-3
    assert all(int(i) < len(inlier_matches) for i in inliers)


def test_ransac_is_deterministic():
    matches = grid_matches(H_EXAMPLE, n_side=4)
    h1, in1 = estimate_h_ransac(matches, inlier_eps=1.0)
    h2, in2 = estimate_h_ransac(matches, inlier_eps=1.0)
    assert np.array_equal(h1, h2)
    assert np.array_equal(in1, in2)


def test_ransac_input_validation():
    matches = grid_matches(H_EXAMPLE)[:3]
    with pytest.raises(EstimationFailedError):
        estimate_h_ransac(matches, inlier_eps=1.0)
    with pytest.raises(InvalidParameterError):
        estimate_h_ransac(grid_matches(H_EXAMPLE), inlier_eps=0.0)


def test_h_precision_fraction():
    eye = np.eye(3)
    matches = [
        mk(0, 0, 0, 0),
        mk(10, 10, 10, 10),
        mk(20, 20, 20.1, 20),
        mk(30, 30, 80.0, 30),
    ]
    idx = np.arange(4)
    assert h_precision(matches, idx, eye, 1.0) == 0.75
    assert h_precision(matches, np.array([], dtype=int), eye, 1.0) == 0.0


# --------------------------------------------------------------- epipolar


def test_epipolar_distance_zero_for_exact_points():
    rng = np.random.default_rng(2)
    r = random_rotation(rng)
    t = np.array([1.0, 0.2, -0.1])
    t /= np.linalg.norm(t)
    f = fundamental_from_pose(np.eye(3), np.eye(3), r, t)
    pts = np.column_stack(
        [rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 20), rng.uniform(4, 9, 20)]
    )
    x1 = pts[:, :2] / pts[:, 2:]
    cam2 = pts @ r.T + t
    x2 = cam2[:, :2] / cam2[:, 2:]
    for a, b in zip(x1, x2):
        assert symmetric_epipolar_distance(a, b, f) < 1e-18


def test_epipolar_distance_zero_along_the_line():
    rng = np.random.default_rng(3)
    r = random_rotation(rng)
    t = np.array([0.3, 1.0, 0.1])
    f = fundamental_from_pose(np.eye(3), np.eye(3), r, t / np.linalg.norm(t))
    a = np.array([0.2, -0.1])
    line = f @ np.array([a[0], a[1], 1.0])
    # Any point on the epipolar line satisfies the constraint.
    b0 = np.array([0.0, -line[2] / line[1]])
    along = np.array([-line[1], line[0]]) / math.hypot(line[0], line[1])
    for step in (0.0, 0.5, 2.0):
        b = b0 + step * along
        assert symmetric_epipolar_distance(a, b, f) < 1e-24


def test_epipolar_distance_matches_hand_formula():
    f = fundamental_from_pose(
        np.eye(3), np.eye(3), np.eye(3), np.array([0.2, 1.0, 0.05])
    )
    a, b = np.array([0.3, 0.4]), np.array([0.35, 0.1])
    ha, hb = np.array([*a, 1.0]), np.array([*b, 1.0])
    la = f @ ha
    lb = f.T @ hb
    resid = float(hb @ la) ** 2
    want = resid * (1.0 / (la[0] ** 2 + la[1] ** 2) + 1.0 / (lb[0] ** 2 + lb[1] ** 2))
    got = symmetric_epipolar_distance(a, b, f)
    assert got == pytest.approx(want, rel=1e-12)


def test_epipolar_distance_degenerate_lines_is_inf():
    f = np.diag([0.0, 0.0, 1.0])
    assert symmetric_epipolar_distance((0.0, 0.0), (0.0, 0.0), f) == math.inf


def test_accuracy_f_exact_rig_is_perfect():
    k1, k2, r, t, matches = stereo_rig(11)
    f = fundamental_from_pose(k1, k2, r, t)
    report = accuracy_f(matches, f, (640, 480), (640, 480))
    assert report.accuracy == 1.0
    assert report.threshold == 5e-4


def test_accuracy_f_equals_per_match_recount():
    k1, k2, r, t, matches = stereo_rig(13)
    rng = np.random.default_rng(13)
    jittered = [
        mk(m.ax, m.ay, m.bx + rng.normal(0, 12.0), m.by + rng.normal(0, 12.0))
        for m in matches
    ]
    dims = (640, 480)
    f = fundamental_from_pose(k1, k2, r, t)
    report = accuracy_f(jittered, f, dims, dims)

    diag = math.hypot(*dims)
    scale = np.diag([diag, diag, 1.0])
    f_n = scale @ f @ scale
    f_n /= np.linalg.norm(f_n)
    recount = sum(
        symmetric_epipolar_distance(
            (m.ax / diag, m.ay / diag), (m.bx / diag, m.by / diag), f_n
        )
        < 5e-4
        for m in jittered
    )
    assert report.n_correct == recount
    assert 0 < report.n_correct < report.n_matches


def test_accuracy_f_is_resolution_independent():
    k1, k2, r, t, matches = stereo_rig(17)
    rng = np.random.default_rng(17)
    jittered = [
        mk(m.ax, m.ay, m.bx + rng.normal(0, 12.0), m.by + rng.normal(0, 12.0))
        for m in matches
    ]
    f = fundamental_from_pose(k1, k2, r, t)
    base = accuracy_f(jittered, f, (640, 480), (640, 480))

    s = 2.0
    scaled = [mk(m.ax * s, m.ay * s, m.bx * s, m.by * s) for m in jittered]
    sm = np.diag([1 / s, 1 / s, 1.0])
    f_scaled = sm.T @ f @ sm
    doubled = accuracy_f(scaled, f_scaled, (1280, 960), (1280, 960))
    assert doubled.n_correct == base.n_correct


def test_accuracy_f_empty_and_zero_matrix():
    report = accuracy_f([], np.eye(3), (100, 100), (100, 100))
    assert (report.n_matches, report.accuracy) == (0, 0.0)
    with pytest.raises(InvalidParameterError):
        accuracy_f([mk(0, 0, 0, 0)], np.zeros((3, 3)), (100, 100), (100, 100))


# -------------------------------------------------------- pose-derived F


def test_fundamental_from_pose_translation_only():
    f = fundamental_from_pose(np.eye(3), np.eye(3), np.eye(3), np.array([1.0, 0, 0]))
    want = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]) / math.sqrt(2)
    assert min(np.linalg.norm(f - want), np.linalg.norm(f + want)) < 1e-12


@pytest.mark.parametrize("seed", [21, 22, 23])
def test_fundamental_from_pose_epipolar_residual(seed):
    k1, k2, r, t, matches = stereo_rig(seed)
    f = fundamental_from_pose(k1, k2, r, t)
    assert np.linalg.norm(f) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.svd(f, compute_uv=False)[2] < 1e-8
    worst = max(
        abs(np.array([m.bx, m.by, 1.0]) @ f @ np.array([m.ax, m.ay, 1.0]))
        for m in matches
    )
    assert worst < 1e-8


def test_fundamental_from_pose_rejects_zero_translation():
    with pytest.raises(InvalidParameterError):
        fundamental_from_pose(np.eye(3), np.eye(3), np.eye(3), np.zeros(3))


def test_relative_pose_composition():
    rng = np.random.default_rng(31)
    r1, r2 = random_rotation(rng), random_rotation(rng)
    t1, t2 = rng.normal(size=3), rng.normal(size=3)
    r, t = relative_pose(r1, t1, r2, t2)
    for _ in range(5):
        x_world = rng.normal(size=3)
        x1 = r1 @ x_world + t1
        x2 = r2 @ x_world + t2
        np.testing.assert_allclose(r @ x1 + t, x2, atol=1e-12)


# ------------------------------------------------------------ file formats


def test_read_homography_file(tmp_path):
    path = tmp_path / "H"
    path.write_text("1 0 3\n0 1 -2\n0 0 1\n")
    h = read_homography_file(path)
    np.testing.assert_array_equal(h, [[1, 0, 3], [0, 1, -2], [0, 0, 1]])


@pytest.mark.parametrize("content", ["1 2 3 4 5 6 7 8", "1 2 3 4 5 6 7 8 x"])
def test_read_homography_file_errors(tmp_path, content):
    path = tmp_path / "H"
    path.write_text(content)
    with pytest.raises(ParseError):
        read_homography_file(path)


def camera_line(name: str, k, r, t) -> str:
    nums = np.concatenate([np.ravel(k), np.ravel(r), np.ravel(t)])
    return name + " " + " ".join(f"{v:.17g}" for v in nums)


def test_read_camera_file_roundtrip(tmp_path):
    k = np.array([[700.0, 0, 320], [0, 700, 240], [0, 0, 1]])
    r = np.eye(3)
    lines = [
        "2",
        camera_line("frame0001.png", k, r, [0.0, 0.0, 0.0]),
        camera_line("frame0002.png", k, r, [0.5, 0.0, 0.1]),
    ]
    path = tmp_path / "rig_par.txt"
    path.write_text("\n".join(lines) + "\n")
    cams = read_camera_file(path)
    assert [c.name for c in cams] == ["frame0001.png", "frame0002.png"]
    np.testing.assert_array_equal(cams[0].k, k)
    np.testing.assert_array_equal(cams[1].t, [0.5, 0.0, 0.1])


@pytest.mark.parametrize(
    "content",
    [
        "",
        "two\ncam 1 2 3\n",
        "2\n" + "a " + " ".join(["1"] * 21) + "\n",
        "1\n" + "a " + " ".join(["1"] * 20) + "\n",
        "1\n" + "a " + " ".join(["1"] * 20) + " x\n",
    ],
)
def test_read_camera_file_errors(tmp_path, content):
    path = tmp_path / "bad_par.txt"
    path.write_text(content)
    with pytest.raises(ParseError):
        read_camera_file(path)
