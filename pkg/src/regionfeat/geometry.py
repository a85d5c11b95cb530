"""Geometric verification: homography and fundamental-matrix evaluation.

A match is judged correct under a ground-truth homography when the projected
query point lands within a diagonal-scaled pixel threshold of its partner,
and under epipolar geometry when the symmetric epipolar distance of the
diagonal-normalized pair stays below a fixed dimensionless threshold.
Homographies are estimated by the normalized direct linear transform inside
a fixed-seed RANSAC loop; the small symmetric eigenproblem at the heart of
the DLT is solved by a self-contained cyclic Jacobi iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EstimationFailedError, InvalidParameterError, ParseError
from .matching import Match

__all__ = [
    "EvalReport",
    "CameraPose",
    "epsilon_for",
    "jacobi_eigh",
    "project_h",
    "match_correct_h",
    "accuracy_h",
    "estimate_h_ransac",
    "h_precision",
    "symmetric_epipolar_distance",
    "accuracy_f",
    "fundamental_from_pose",
    "relative_pose",
    "read_homography_file",
    "read_camera_file",
]

F_THRESHOLD_DEFAULT = 5e-4
RANSAC_ITERATIONS = 2000
RANSAC_SEED = 42


@dataclass(frozen=True)
class EvalReport:
    """Correctness tally for one match set against one ground truth."""

    n_matches: int
    n_correct: int
    accuracy: float
    threshold: float


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera calibration of one frame: x_cam = r @ x_world + t."""

    name: str
    k: np.ndarray
    r: np.ndarray
    t: np.ndarray


def epsilon_for(width: int, height: int) -> float:
    """Pixel correctness threshold, 0.003 of the image diagonal."""
    if width <= 0 or height <= 0:
        raise InvalidParameterError("image dimensions must be positive")
    return 0.003 * math.hypot(width, height)


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi.

    Returns eigenvalues ascending and the matching orthonormal eigenvector
    columns. Plane rotations annihilate one off-diagonal entry at a time;
    sweeps repeat until the off-diagonal mass is negligible relative to the
    matrix scale.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameterError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise InvalidParameterError("matrix must be finite")
    scale = max(float(np.abs(a).max()), 1e-300)
    if float(np.abs(a - a.T).max()) > 1e-9 * scale:
        raise InvalidParameterError("matrix must be symmetric")

    n = a.shape[0]
    a = (a + a.T) / 2.0
    v = np.eye(n)
    for _ in range(max_sweeps):
        # Cancellation can push the difference a hair below zero near convergence.
        off = math.sqrt(max(float((a**2).sum() - (np.diag(a) ** 2).sum()), 0.0))
        if off <= tol * scale * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol * scale:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def project_h(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Apply a homography to (n, 2) points; points sent to infinity map to inf."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    ones = np.ones((len(pts), 1))
    hom = np.hstack([pts, ones]) @ h.T
    w = hom[:, 2]
    safe = np.abs(w) > 1e-12
    out = np.full((len(pts), 2), np.inf)
    out[safe] = hom[safe, :2] / w[safe, None]
    return out


def match_correct_h(match: Match, h: np.ndarray, eps: float) -> bool:
    """True when the projected query endpoint lands strictly within eps."""
    proj = project_h(h, np.array([[match.ax, match.ay]]))[0]
    if not np.all(np.isfinite(proj)):
        return False
    return bool(math.hypot(proj[0] - match.bx, proj[1] - match.by) < eps)


def accuracy_h(matches: Sequence[Match], h: np.ndarray, eps: float) -> EvalReport:
    """Fraction of matches correct under a ground-truth homography.

    An empty match list reports accuracy 0, never NaN.
    """
    if not matches:
        return EvalReport(0, 0, 0.0, eps)
    pts_a = np.array([[m.ax, m.ay] for m in matches])
    pts_b = np.array([[m.bx, m.by] for m in matches])
    proj = project_h(h, pts_a)
    dist = np.hypot(proj[:, 0] - pts_b[:, 0], proj[:, 1] - pts_b[:, 1])
    good = np.isfinite(dist) & (dist < eps)
    n_correct = int(good.sum())
    return EvalReport(len(matches), n_correct, n_correct / len(matches), eps)


def _normalize_points(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hartley normalization: centroid at origin, mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    shifted = pts - centroid
    mean_dist = float(np.hypot(shifted[:, 0], shifted[:, 1]).mean())
    if mean_dist < 1e-12:
        raise EstimationFailedError("coincident points cannot be normalized")
    s = math.sqrt(2.0) / mean_dist
    t = np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )
    return t, shifted * s


def _dlt_h(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Homography from >= 4 correspondences by the normalized DLT."""
    t_src, src_n = _normalize_points(src)
    t_dst, dst_n = _normalize_points(dst)
    n = len(src)
    a = np.zeros((2 * n, 9))
    x, y = src_n[:, 0], src_n[:, 1]
    u, v = dst_n[:, 0], dst_n[:, 1]
    a[0::2, 0] = -x
    a[0::2, 1] = -y
    a[0::2, 2] = -1.0
    a[0::2, 6] = u * x
    a[0::2, 7] = u * y
    a[0::2, 8] = u
    a[1::2, 3] = -x
    a[1::2, 4] = -y
    a[1::2, 5] = -1.0
    a[1::2, 6] = v * x
    a[1::2, 7] = v * y
    a[1::2, 8] = v
    w, vecs = jacobi_eigh(a.T @ a)
    h_n = vecs[:, 0].reshape(3, 3)
    t_dst_inv = np.linalg.inv(t_dst)
    h = t_dst_inv @ h_n @ t_src
    if abs(h[2, 2]) > 1e-12:
        h = h / h[2, 2]
    else:
        h = h / np.linalg.norm(h)
    return h


def _transfer_errors(h: np.ndarray, pts_a: np.ndarray, pts_b: np.ndarray) -> np.ndarray:
    """Symmetric squared transfer error per correspondence."""
    try:
        h_inv = np.linalg.inv(h)
    except np.linalg.LinAlgError:
        return np.full(len(pts_a), np.inf)
    fwd = project_h(h, pts_a)
    bwd = project_h(h_inv, pts_b)
    d_f = (fwd[:, 0] - pts_b[:, 0]) ** 2 + (fwd[:, 1] - pts_b[:, 1]) ** 2
    d_b = (bwd[:, 0] - pts_a[:, 0]) ** 2 + (bwd[:, 1] - pts_a[:, 1]) ** 2
    err = 0.5 * (d_f + d_b)
    return np.where(np.isfinite(err), err, np.inf)


def _has_collinear_triple(pts: np.ndarray) -> bool:
    span = max(float(np.abs(pts).max()), 1.0)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            for k in range(j + 1, len(pts)):
                u = pts[j] - pts[i]
                w = pts[k] - pts[i]
                if abs(u[0] * w[1] - u[1] * w[0]) < 1e-9 * span * span:
                    return True
    return False


def estimate_h_ransac(
    matches: Sequence[Match],
    inlier_eps: float,
    iterations: int = RANSAC_ITERATIONS,
    seed: int = RANSAC_SEED,
) -> tuple[np.ndarray, np.ndarray]:
    """RANSAC homography with a final refit on the best consensus set.

    Minimal 4-point samples are drawn from a fixed-seed generator so repeat
    runs agree exactly. Returns (homography, sorted inlier indices); raises
    EstimationFailedError when no sample yields at least 4 inliers.
    """
    if len(matches) < 4:
        raise EstimationFailedError("homography estimation needs at least 4 matches")
    if inlier_eps <= 0:
        raise InvalidParameterError("inlier_eps must be positive")
    pts_a = np.array([[m.ax, m.ay] for m in matches])
    pts_b = np.array([[m.bx, m.by] for m in matches])
    n = len(matches)
    rng = np.random.default_rng(seed)
    eps_sq = inlier_eps * inlier_eps

    best_count = 0
    best_err = math.inf
    best_inliers: np.ndarray | None = None
    for _ in range(iterations):
        idx = rng.choice(n, size=4, replace=False)
        sa, sb = pts_a[idx], pts_b[idx]
        if _has_collinear_triple(sa) or _has_collinear_triple(sb):
            continue
        try:
            h = _dlt_h(sa, sb)
        except EstimationFailedError:
            continue
        err = _transfer_errors(h, pts_a, pts_b)
        inliers = err < eps_sq
        count = int(inliers.sum())
        if count < 4:
            continue
        total = float(err[inliers].sum())
        if count > best_count or (count == best_count and total < best_err):
            best_count = count
            best_err = total
            best_inliers = inliers

    if best_inliers is None:
        raise EstimationFailedError("no RANSAC sample reached 4 inliers")
    h = _dlt_h(pts_a[best_inliers], pts_b[best_inliers])
    err = _transfer_errors(h, pts_a, pts_b)
    final = np.flatnonzero(err < eps_sq)
    if len(final) < 4:
        final = np.flatnonzero(best_inliers)
    return h, final


def h_precision(
    matches: Sequence[Match],
    inlier_idx: np.ndarray,
    h_true: np.ndarray,
    eps: float,
) -> float:
    """Fraction of estimation inliers that are correct under the true map."""
    if len(inlier_idx) == 0:
        return 0.0
    good = sum(1 for i in inlier_idx if match_correct_h(matches[int(i)], h_true, eps))
    return good / len(inlier_idx)


def _epi_distances(f: np.ndarray, pts_a: np.ndarray, pts_b: np.ndarray) -> np.ndarray:
    ones = np.ones((len(pts_a), 1))
    ha = np.hstack([pts_a, ones])
    hb = np.hstack([pts_b, ones])
    la = ha @ f.T  # lines F a in the second image
    lb = hb @ f  # lines F^T b in the first image
    resid = (hb * la).sum(axis=1) ** 2
    na = la[:, 0] ** 2 + la[:, 1] ** 2
    nb = lb[:, 0] ** 2 + lb[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        total = resid * (np.where(na > 0, 1.0 / na, np.inf) + np.where(nb > 0, 1.0 / nb, np.inf))
    total = np.where((na == 0) & (nb == 0), np.inf, total)
    # A zero residual is correct regardless of degenerate lines.
    total = np.where(resid == 0, 0.0, total)
    return total


def symmetric_epipolar_distance(a_xy: Sequence[float], b_xy: Sequence[float], f: np.ndarray) -> float:
    """Squared epipolar residual split across both images.

    (b' F a)^2 weighted by the inverse squared norms of both epipolar lines;
    degenerate lines with nonzero residual give inf.
    """
    return float(
        _epi_distances(
            np.asarray(f, dtype=np.float64),
            np.array([a_xy], dtype=np.float64),
            np.array([b_xy], dtype=np.float64),
        )[0]
    )


def accuracy_f(
    matches: Sequence[Match],
    f: np.ndarray,
    dims_a: tuple[int, int],
    dims_b: tuple[int, int],
    threshold: float = F_THRESHOLD_DEFAULT,
) -> EvalReport:
    """Fraction of matches consistent with a fundamental matrix.

    Coordinates are divided by their image diagonals and the matrix is
    rescaled to match, so the threshold is resolution independent.
    """
    if not matches:
        return EvalReport(0, 0, 0.0, threshold)
    diag_a = math.hypot(*dims_a)
    diag_b = math.hypot(*dims_b)
    pts_a = np.array([[m.ax, m.ay] for m in matches]) / diag_a
    pts_b = np.array([[m.bx, m.by] for m in matches]) / diag_b
    scale_a = np.diag([diag_a, diag_a, 1.0])
    scale_b = np.diag([diag_b, diag_b, 1.0])
    f_n = scale_b @ np.asarray(f, dtype=np.float64) @ scale_a
    norm = np.linalg.norm(f_n)
    if norm < 1e-15:
        raise InvalidParameterError("fundamental matrix is zero")
    f_n = f_n / norm
    dist = _epi_distances(f_n, pts_a, pts_b)
    good = dist < threshold
    n_correct = int(good.sum())
    return EvalReport(len(matches), n_correct, n_correct / len(matches), threshold)


def _cross_matrix(t: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -t[2], t[1]], [t[2], 0.0, -t[0]], [-t[1], t[0], 0.0]]
    )


def fundamental_from_pose(
    k1: np.ndarray, k2: np.ndarray, r: np.ndarray, t: np.ndarray
) -> np.ndarray:
    """Fundamental matrix of a calibrated relative pose (x2 = r x1 + t).

    The result is rank 2 by construction up to rounding; the smallest
    singular value is zeroed and the matrix scaled to unit Frobenius norm
    with a positive leading entry for a canonical representative.
    """
    k1 = np.asarray(k1, dtype=np.float64)
    k2 = np.asarray(k2, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64).reshape(3)
    if np.linalg.norm(t) < 1e-12:
        raise InvalidParameterError("translation must be nonzero for a fundamental matrix")
    f = np.linalg.inv(k2).T @ _cross_matrix(t) @ np.asarray(r, dtype=np.float64) @ np.linalg.inv(k1)
    u, s, vt = np.linalg.svd(f)
    s = s.copy()
    s[2] = 0.0
    f = (u * s) @ vt
    f = f / np.linalg.norm(f)
    flat = f.ravel()
    lead = flat[np.argmax(np.abs(flat))]
    if lead < 0:
        f = -f
    return f


def relative_pose(
    r1: np.ndarray, t1: np.ndarray, r2: np.ndarray, t2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Relative motion from two world-to-camera poses."""
    r1 = np.asarray(r1, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    r = r2 @ r1.T
    t = np.asarray(t2, dtype=np.float64).reshape(3) - r @ np.asarray(t1, dtype=np.float64).reshape(3)
    return r, t


def read_homography_file(path: str | Path) -> np.ndarray:
    """Read a whitespace-separated 3x3 matrix."""
    path = Path(path)
    tokens = path.read_text().split()
    if len(tokens) != 9:
        raise ParseError(f"expected 9 numbers, got {len(tokens)}", path=str(path))
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise ParseError("non-numeric entry in homography file", path=str(path))
    return np.array(vals).reshape(3, 3)


def read_camera_file(path: str | Path) -> list[CameraPose]:
    """Read a camera parameter file: a count line, then per frame a name
    followed by K (9), R (9) and t (3) in row-major order."""
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty camera file", path=str(path))
    try:
        count = int(lines[0].split()[0])
    except ValueError:
        raise ParseError("first line must be the frame count", path=str(path), line=1)
    if len(lines) - 1 != count:
        raise ParseError(
            f"expected {count} camera lines, found {len(lines) - 1}", path=str(path)
        )
    cams: list[CameraPose] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 22:
            raise ParseError(
                f"expected name plus 21 numbers, got {len(parts)} fields",
                path=str(path),
                line=lineno,
            )
        try:
            nums = np.array([float(p) for p in parts[1:]])
        except ValueError:
            raise ParseError("non-numeric camera entry", path=str(path), line=lineno)
        cams.append(
            CameraPose(
                name=parts[0],
                k=nums[0:9].reshape(3, 3),
                r=nums[9:18].reshape(3, 3),
                t=nums[18:21],
            )
        )
    return cams
