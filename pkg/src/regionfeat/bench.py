"""Dataset benchmark harness.

Runs the full matching pipeline over a directory of image pairs with ground
truth and reports per-pair counts and accuracies as CSV. Three directory
layouts are recognized automatically: planar sequences with ``H1to<k>p``
homography files, planar sequences with ``H_1_<k>`` files, and calibrated
sequences with a ``*_par.txt`` camera file (evaluated through the
fundamental matrix). A synthetic mode warps one source image by a ladder of
known tilts, so the ground truth is exact by construction.

Rows are produced in a fixed pair order and all estimation is seeded, so a
rerun writes a byte-identical CSV even with worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ToolConfig
from .errors import EstimationFailedError, InvalidParameterError, ParseError
from .geometry import (
    accuracy_f,
    accuracy_h,
    epsilon_for,
    estimate_h_ransac,
    fundamental_from_pose,
    h_precision,
    read_camera_file,
    read_homography_file,
    relative_pose,
)
from .imaging import GrayImage, invert_affine, read_image, warp_affine
from .pipeline import match_pipeline

__all__ = ["PairResult", "CSV_HEADER", "detect_dataset", "run_bench", "results_to_csv"]

CSV_HEADER = "pair,n_matches,accuracy,h_accuracy_or_f_accuracy,threshold"

_IMAGE_SUFFIXES = (".pgm", ".ppm")

SYNTHETIC_TILTS = (math.sqrt(2.0), 2.0, 2.0 * math.sqrt(2.0), 4.0, 4.0 * math.sqrt(2.0))


@dataclass(frozen=True)
class PairResult:
    """One CSV row: ground-truth accuracy plus the estimation-side accuracy
    (RANSAC homography precision for planar data, epipolar accuracy for
    calibrated data)."""

    pair: str
    n_matches: int
    accuracy: float
    aux_accuracy: float
    threshold: float

    def csv_row(self) -> str:
        return (
            f"{self.pair},{self.n_matches},{self.accuracy:.6f},"
            f"{self.aux_accuracy:.6f},{self.threshold:.6g}"
        )


def results_to_csv(results: list[PairResult]) -> str:
    return "\n".join([CSV_HEADER] + [r.csv_row() for r in results]) + "\n"


def detect_dataset(directory: str | Path) -> str:
    """Classify a dataset directory as oxford, hpatches or pose."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidParameterError(f"{directory} is not a directory")
    names = {p.name for p in directory.iterdir()}
    if any(n.startswith("H1to") and n.endswith("p") for n in names):
        return "oxford"
    if any(n.startswith("H_1_") for n in names):
        return "hpatches"
    if any(n.endswith("_par.txt") for n in names):
        return "pose"
    raise InvalidParameterError(
        f"{directory} contains no recognized ground truth "
        "(H1to*p, H_1_*, or *_par.txt)"
    )


def _find_image(directory: Path, stem: str) -> Path:
    for suffix in _IMAGE_SUFFIXES:
        p = directory / (stem + suffix)
        if p.exists():
            return p
    raise ParseError(f"no {stem}.pgm or {stem}.ppm in {directory}", path=str(directory))


def _resolve_frame_image(directory: Path, name: str) -> Path:
    """Camera files may reference formats we do not read; fall back to a
    converted sibling with the same stem."""
    p = directory / name
    if p.exists() and p.suffix.lower() in _IMAGE_SUFFIXES:
        return p
    return _find_image(directory, Path(name).stem)


def _match_for_pair(img_a: GrayImage, img_b: GrayImage, cfg: ToolConfig):
    return match_pipeline(
        img_a,
        img_b,
        ratio=cfg.ratio,
        alpha1=cfg.alpha1,
        alpha2=cfg.alpha2,
        simulation=cfg.simulation,
        theta=cfg.theta,
        enhance_params=cfg.enhance_params(),
        mser_params=cfg.mser_params(),
    )


def _eval_planar(pair: str, img_a: GrayImage, img_b: GrayImage, h: np.ndarray,
                 cfg: ToolConfig) -> PairResult:
    matches = _match_for_pair(img_a, img_b, cfg)
    eps = epsilon_for(img_b.width, img_b.height)
    report = accuracy_h(matches, h, eps)
    try:
        _, inliers = estimate_h_ransac(
            matches, eps, iterations=cfg.ransac_iterations, seed=cfg.ransac_seed
        )
        aux = h_precision(matches, inliers, h, eps)
    except EstimationFailedError:
        aux = 0.0
    return PairResult(pair, report.n_matches, report.accuracy, aux, eps)


def _pairs_planar(directory: Path, kind: str) -> list[tuple[str, Path, Path, Path]]:
    pairs = []
    base = _find_image(directory, "img1" if kind == "oxford" else "1")
    for k in range(2, 7):
        h_name = f"H1to{k}p" if kind == "oxford" else f"H_1_{k}"
        h_path = directory / h_name
        if not h_path.exists():
            continue
        stem = f"img{k}" if kind == "oxford" else str(k)
        try:
            img_path = _find_image(directory, stem)
        except ParseError:
            continue
        pairs.append((f"1-{k}", base, img_path, h_path))
    if not pairs:
        raise InvalidParameterError(f"no usable pairs found in {directory}")
    return pairs


def _run_planar(directory: Path, kind: str, cfg: ToolConfig) -> list[PairResult]:
    pairs = _pairs_planar(directory, kind)

    def job(entry: tuple[str, Path, Path, Path]) -> PairResult:
        name, a_path, b_path, h_path = entry
        img_a = read_image(a_path)
        img_b = read_image(b_path)
        h = read_homography_file(h_path)
        return _eval_planar(name, img_a, img_b, h, cfg)

    return _parallel(job, pairs, cfg.jobs)


def _run_pose(directory: Path, cfg: ToolConfig) -> list[PairResult]:
    par_files = sorted(directory.glob("*_par.txt"))
    cams = read_camera_file(par_files[0])
    if len(cams) < 2:
        raise InvalidParameterError("camera file lists fewer than two frames")
    step = max(1, cfg.pose_interval)
    entries = []
    for i in range(0, len(cams) - step, step):
        entries.append((i, i + step))

    def job(entry: tuple[int, int]) -> PairResult:
        i, j = entry
        cam_a, cam_b = cams[i], cams[j]
        img_a = read_image(_resolve_frame_image(directory, cam_a.name))
        img_b = read_image(_resolve_frame_image(directory, cam_b.name))
        r, t = relative_pose(cam_a.r, cam_a.t, cam_b.r, cam_b.t)
        f = fundamental_from_pose(cam_a.k, cam_b.k, r, t)
        matches = _match_for_pair(img_a, img_b, cfg)
        report = accuracy_f(
            matches, f,
            (img_a.width, img_a.height), (img_b.width, img_b.height),
            threshold=cfg.f_threshold,
        )
        name = f"{Path(cam_a.name).stem}-{Path(cam_b.name).stem}"
        return PairResult(name, report.n_matches, report.accuracy, report.accuracy,
                          report.threshold)

    return _parallel(job, entries, cfg.jobs)


def _run_synthetic(source: Path, cfg: ToolConfig) -> list[PairResult]:
    img = read_image(source)

    def job(t: float) -> PairResult:
        m = np.array([[1.0 / t, 0.0, 0.0], [0.0, 1.0, 0.0]])
        warped, inverse = warp_affine(img, m, antialias=True)
        forward = invert_affine(inverse)
        h = np.vstack([forward, [0.0, 0.0, 1.0]])
        return _eval_planar(f"t={t:.4g}", img, warped, h, cfg)

    return _parallel(job, list(SYNTHETIC_TILTS), cfg.jobs)


def _parallel(job, entries, jobs: int):
    if jobs <= 1 or len(entries) <= 1:
        return [job(e) for e in entries]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(job, entries))


def run_bench(
    dataset: str | Path | None = None,
    kind: str = "auto",
    synthetic_source: str | Path | None = None,
    cfg: ToolConfig | None = None,
) -> list[PairResult]:
    """Run the benchmark; exactly one of dataset or synthetic_source."""
    cfg = cfg or ToolConfig()
    if (dataset is None) == (synthetic_source is None):
        raise InvalidParameterError("pass exactly one of dataset or synthetic_source")
    if synthetic_source is not None:
        return _run_synthetic(Path(synthetic_source), cfg)
    directory = Path(dataset)
    if kind == "auto":
        kind = detect_dataset(directory)
    if kind in ("oxford", "hpatches"):
        return _run_planar(directory, kind, cfg)
    if kind == "pose":
        return _run_pose(directory, cfg)
    raise InvalidParameterError(f"unknown dataset kind {kind!r}")
