"""Command line interface.

One executable with a subcommand per pipeline stage plus the end-to-end
match and bench tools. Exit codes: 0 success, 1 usage error, 2 bad input
data, 3 internal failure. ``--dump-config`` prints every configurable key
with its default in the config file syntax.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .affine_sim import PAPER_SETS, classify_affine_pair, simulate_views
from .bench import results_to_csv, run_bench
from .config import build_config, dump_config
from .errors import (
    ClassificationFailedError,
    ConfigurationError,
    DegenerateRegionError,
    EstimationFailedError,
    RegionFeatError,
)
from .features import (
    detect_and_describe,
    detect_keypoints,
    load_external_descriptors,
    write_descriptors,
)
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
from .imaging import enhance, read_image, round_half_up, write_pgm
from .matching import read_matches, write_matches
from .mser import mser_segment, region_at
from .pipeline import match_pipeline
from .region_desc import (
    default_weights,
    fuse,
    region_signature,
    relative_position,
    write_fused_descriptors,
)

USAGE_ERROR = 1
DATA_ERROR = 2
INTERNAL_ERROR = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        print(f"error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _parse_auto_float(raw: str) -> float | None:
    if raw.lower() == "auto":
        return None
    try:
        return float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {raw!r}")


def _parse_dims(raw: str) -> tuple[int, int]:
    try:
        w, h = raw.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {raw!r}")


def _add_config_args(
    sub: argparse.ArgumentParser, pipeline: bool = True, alphas: bool | None = None
) -> None:
    alphas = pipeline if alphas is None else alphas
    sub.add_argument("--config", metavar="FILE", help="config file of key = value lines")
    if alphas:
        sub.add_argument("--alpha1", type=_parse_auto_float, metavar="W",
                         help="histogram weight, or 'auto' for the family default")
        sub.add_argument("--alpha2", type=_parse_auto_float, metavar="W",
                         help="position weight, or 'auto' for the family default")
    if pipeline:
        sub.add_argument("--ratio", type=float, help="ratio-test threshold")
        sub.add_argument("--no-simulation", action="store_true",
                         help="match the original frames only")
        sub.add_argument("--theta", type=float, metavar="DEG",
                         help="classification probe tilt angle in degrees")
    sub.add_argument("--tile-rows", type=int, dest="clahe_tile_rows")
    sub.add_argument("--tile-cols", type=int, dest="clahe_tile_cols")
    sub.add_argument("--clip-limit", type=lambda r: None if r == "auto" else int(r),
                     dest="clahe_clip_limit")
    sub.add_argument("--window", type=int, dest="bilateral_window")
    sub.add_argument("--sigma-d", type=float, dest="bilateral_sigma_d")
    sub.add_argument("--sigma-r", type=float, dest="bilateral_sigma_r")
    sub.add_argument("--delta", type=int, dest="mser_delta")
    sub.add_argument("--max-variation", type=float, dest="mser_max_variation")
    sub.add_argument("--min-area", type=int, dest="mser_min_area")
    sub.add_argument("--max-area", type=lambda r: None if r == "auto" else int(r),
                     dest="mser_max_area")
    sub.add_argument("--merge-overlap", type=float, dest="mser_merge_overlap")


_CONFIG_KEYS = (
    "ratio", "alpha1", "alpha2",
    "clahe_tile_rows", "clahe_tile_cols", "clahe_clip_limit",
    "bilateral_window", "bilateral_sigma_d", "bilateral_sigma_r",
    "mser_delta", "mser_max_variation", "mser_min_area", "mser_max_area",
    "mser_merge_overlap",
    "ransac_iterations", "ransac_seed", "f_threshold", "pose_interval", "jobs",
)


def _config_from_args(args: argparse.Namespace):
    overrides = {}
    for key in _CONFIG_KEYS:
        if hasattr(args, key) and getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    # 'auto' sentinels arrive as explicit None only via the special types;
    # argparse leaves unset options as None too, so autos are re-stated in a
    # config file when they must override a file value.
    if getattr(args, "no_simulation", False):
        overrides["simulation"] = False
    if getattr(args, "theta", None) is not None:
        overrides["theta_deg"] = args.theta
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    return build_config(getattr(args, "config", None), overrides)


def cmd_enhance(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    img = read_image(args.input)
    out = enhance(img, cfg.enhance_params())
    write_pgm(out, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    img = read_image(args.input)
    if not args.raw:
        img = enhance(img, cfg.enhance_params())
    rmap = mser_segment(img, cfg.mser_params())
    # Label ids can exceed the PGM range; fold them into 1..255 for viewing.
    vis = np.where(rmap.label > 0, (rmap.label - 1) % 255 + 1, 0).astype(np.uint8)
    from .imaging import GrayImage

    write_pgm(GrayImage(vis), args.label_out)
    lines = [
        f"{r.ident} {r.area} {r.bbox[0]} {r.bbox[1]} {r.bbox[2]} {r.bbox[3]}"
        for r in rmap.regions.values()
    ]
    Path(args.regions_out).write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"{len(rmap.regions)} regions")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    img = read_image(args.input)
    if args.tilts:
        tilts = [float(t) for t in args.tilts.split(",")]
    elif args.reducing:
        tilts = list(PAPER_SETS.reducing)
    else:
        tilts = list(PAPER_SETS.enlarging)
    phis = None
    if args.phis:
        phis = [math.radians(float(p)) for p in args.phis.split(",")]
    views = simulate_views(img, tilts, phis)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for view in views:
        write_pgm(view.image, outdir / f"view_{view.view_id:03d}.pgm")
        m = view.to_original
        nums = " ".join(f"{v:.9g}" for v in m.ravel())
        manifest.append(f"{view.view_id} {view.tilt:.9g} {math.degrees(view.phi):.9g} {nums}")
    (outdir / "views.txt").write_text("\n".join(manifest) + "\n")
    print(f"wrote {len(views)} views to {outdir}")
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    img = read_image(args.input)
    keypoints = detect_keypoints(img)
    lines = [f"{k.x:.9g} {k.y:.9g} {k.scale:.9g} {k.angle:.9g}" for k in keypoints]
    Path(args.output).write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"{len(keypoints)} keypoints")
    return 0


def cmd_describe(args: argparse.Namespace) -> int:
    img = read_image(args.input)
    if not args.fused:
        feats = detect_and_describe(img)
        write_descriptors(args.output, feats)
        print(f"{len(feats)} descriptors")
        return 0

    # Fused export mirrors the matching pipeline's identity view: detect on
    # the enhanced image and take regions from that same image.
    cfg = _config_from_args(args)
    alpha1, alpha2 = cfg.alpha1, cfg.alpha2
    if alpha1 is None or alpha2 is None:
        d1, d2 = default_weights("builtin_grad")
        alpha1 = d1 if alpha1 is None else alpha1
        alpha2 = d2 if alpha2 is None else alpha2
    enhanced = enhance(img, cfg.enhance_params())
    rmap = mser_segment(enhanced, cfg.mser_params())
    feats = detect_and_describe(enhanced)

    sigs: dict[int, object] = {}
    fused_rows = []
    for kp, base in zip(feats.keypoints, feats.descriptors):
        px, py = int(round_half_up(kp.x)), int(round_half_up(kp.y))
        ident = None
        if 0 <= px < rmap.width and 0 <= py < rmap.height:
            ident = region_at(rmap, kp.x, kp.y)
        sig = None
        if ident is not None:
            if ident not in sigs:
                try:
                    sigs[ident] = region_signature(rmap.regions[ident], enhanced)
                except DegenerateRegionError:
                    sigs[ident] = None
            sig = sigs[ident]
        relpos = relative_position(sig, kp.x, kp.y) if sig is not None else None
        fused_rows.append(fuse(base, sig, relpos, alpha1, alpha2))

    write_fused_descriptors(
        args.output, feats.keypoints, fused_rows,
        base_dim=feats.descriptors.shape[1],
        alpha1=alpha1, alpha2=alpha2, family=feats.family,
    )
    print(f"{len(feats)} fused descriptors")
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    img_a = read_image(args.image_a)
    img_b = read_image(args.image_b)
    ext_a = load_external_descriptors(args.desc_a) if args.desc_a else None
    ext_b = load_external_descriptors(args.desc_b) if args.desc_b else None
    matches = match_pipeline(
        img_a,
        img_b,
        ratio=cfg.ratio,
        alpha1=cfg.alpha1,
        alpha2=cfg.alpha2,
        simulation=cfg.simulation,
        theta=cfg.theta,
        enhance_params=cfg.enhance_params(),
        mser_params=cfg.mser_params(),
        external_a=ext_a,
        external_b=ext_b,
    )
    write_matches(args.output, matches)
    print(f"{len(matches)} matches")
    return 0


def cmd_eval_h(args: argparse.Namespace) -> int:
    matches = read_matches(args.matches)
    h = read_homography_file(args.homography)
    eps = args.eps if args.eps is not None else epsilon_for(args.width, args.height)
    report = accuracy_h(matches, h, eps)
    print(
        f"n_matches={report.n_matches} n_correct={report.n_correct} "
        f"accuracy={report.accuracy:.6f} threshold={report.threshold:.6g}"
    )
    if args.ransac:
        try:
            _, inliers = estimate_h_ransac(
                matches, eps, iterations=args.iterations, seed=args.seed
            )
            prec = h_precision(matches, inliers, h, eps)
            print(f"ransac_inliers={len(inliers)} h_precision={prec:.6f}")
        except EstimationFailedError as exc:
            print(f"ransac_inliers=0 h_precision=0.000000 ({exc})")
    return 0


def _find_camera(cams, token: str):
    for cam in cams:
        if cam.name == token or Path(cam.name).stem == token:
            return cam
    try:
        return cams[int(token)]
    except (ValueError, IndexError):
        raise ConfigurationError(f"no frame {token!r} in camera file")


def cmd_eval_f(args: argparse.Namespace) -> int:
    matches = read_matches(args.matches)
    cams = read_camera_file(args.cameras)
    cam_a = _find_camera(cams, args.frame_a)
    cam_b = _find_camera(cams, args.frame_b)
    r, t = relative_pose(cam_a.r, cam_a.t, cam_b.r, cam_b.t)
    f = fundamental_from_pose(cam_a.k, cam_b.k, r, t)
    report = accuracy_f(matches, f, args.dims_a, args.dims_b, threshold=args.threshold)
    print(
        f"n_matches={report.n_matches} n_correct={report.n_correct} "
        f"accuracy={report.accuracy:.6f} threshold={report.threshold:.6g}"
    )
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    img_a = read_image(args.image_a)
    img_b = read_image(args.image_b)
    theta = math.radians(args.theta) if args.theta is not None else math.pi / 4
    order = classify_affine_pair(img_a, img_b, theta=theta)
    if order == "a_lower":
        print("a: lower affine degree")
    elif order == "b_lower":
        print("b: lower affine degree")
    else:
        print("tie")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    results = run_bench(
        dataset=args.dataset,
        kind=args.kind,
        synthetic_source=args.synthetic,
        cfg=cfg,
    )
    text = results_to_csv(results)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="regionfeat", description=__doc__)
    parser.add_argument("--version", action="version", version=f"regionfeat {__version__}")
    parser.add_argument("--dump-config", action="store_true",
                        help="print all config keys with defaults and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("enhance", help="adaptive equalization plus edge-preserving smoothing")
    p.add_argument("input")
    p.add_argument("output")
    _add_config_args(p, pipeline=False)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("segment", help="stable region segmentation")
    p.add_argument("input")
    p.add_argument("label_out", help="label image (PGM, ids folded into 1..255)")
    p.add_argument("regions_out", help="region table: id area min_x min_y max_x max_y")
    p.add_argument("--raw", action="store_true", help="segment the input as-is, skip enhancement")
    _add_config_args(p, pipeline=False)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("simulate", help="write simulated affine views plus a manifest")
    p.add_argument("input")
    p.add_argument("outdir")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--enlarging", action="store_true", help="tilt set for the low-affine image (default)")
    group.add_argument("--reducing", action="store_true", help="tilt set for the high-affine image")
    group.add_argument("--tilts", metavar="T1,T2,...", help="explicit affine quantities")
    p.add_argument("--phis", metavar="D1,D2,...", help="tilt directions in degrees")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="write keypoints as 'x y scale angle' lines")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("describe", help="write descriptors in the interchange format")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--fused", action="store_true",
                   help="enhance, segment, and append the weighted region parts")
    _add_config_args(p, pipeline=False, alphas=True)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("match", help="match two images end to end")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("output")
    p.add_argument("--desc-a", metavar="FILE", help="external descriptors for image A")
    p.add_argument("--desc-b", metavar="FILE", help="external descriptors for image B")
    _add_config_args(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval-h", help="score a match file against a homography")
    p.add_argument("matches")
    p.add_argument("homography")
    p.add_argument("--width", type=int, required=True, help="width of image B")
    p.add_argument("--height", type=int, required=True, help="height of image B")
    p.add_argument("--eps", type=float, help="override the pixel threshold")
    p.add_argument("--ransac", action="store_true", help="also estimate and score a homography")
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_eval_h)

    p = sub.add_parser("eval-f", help="score a match file against calibrated cameras")
    p.add_argument("matches")
    p.add_argument("cameras", help="camera parameter file")
    p.add_argument("frame_a", help="frame name, stem, or index")
    p.add_argument("frame_b")
    p.add_argument("--dims-a", type=_parse_dims, required=True, metavar="WxH")
    p.add_argument("--dims-b", type=_parse_dims, required=True, metavar="WxH")
    p.add_argument("--threshold", type=float, default=5e-4)
    p.set_defaults(func=cmd_eval_f)

    p = sub.add_parser("classify", help="which image has the lower affine degree")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--theta", type=float, metavar="DEG", help="probe tilt angle")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench", help="run the pipeline over a dataset, write CSV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--dataset", metavar="DIR")
    group.add_argument("--synthetic", metavar="IMAGE", help="tilt ladder from one source image")
    p.add_argument("--kind", choices=("auto", "oxford", "hpatches", "pose"), default="auto")
    p.add_argument("--out", metavar="CSV")
    p.add_argument("--jobs", type=int)
    p.add_argument("--interval", type=int, dest="pose_interval")
    _add_config_args(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return USAGE_ERROR
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else USAGE_ERROR

    if args.dump_config:
        sys.stdout.write(dump_config())
        return 0
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR

    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except ClassificationFailedError as exc:
        print(f"error: classification failed: {exc}", file=sys.stderr)
        return DATA_ERROR
    except RegionFeatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
