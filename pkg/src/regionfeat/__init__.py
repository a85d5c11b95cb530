"""Affine-robust feature matching with region-augmented descriptors.

The toolkit matches image pairs under large viewpoint change by simulating
classified tilt sets on each side, enhancing contrast before detection,
and extending every local descriptor with the intensity histogram and
centroid-relative position of the stable region that contains it. Geometric
harnesses score the resulting matches against homography or epipolar ground
truth.
"""

from .affine_sim import (
    ASIFT_TILTS,
    PAPER_SETS,
    AffinePose,
    SamplingSets,
    SimulatedView,
    average_differ,
    classify_affine_pair,
    max_affine,
    pose_matrix,
    simulate_views,
    tilt_from_angle,
)
from .bench import CSV_HEADER, PairResult, detect_dataset, results_to_csv, run_bench
from .config import ToolConfig, build_config, dump_config, parse_config_file
from .errors import (
    ClassificationFailedError,
    ConfigurationError,
    DegenerateRegionError,
    EstimationFailedError,
    InvalidParameterError,
    ParseError,
    RegionFeatError,
)
from .features import (
    BINARY_FAMILIES,
    DESCRIPTOR_DIM,
    FeatureSet,
    Keypoint,
    compute_base_descriptor,
    compute_base_descriptors,
    detect_and_describe,
    detect_keypoints,
    load_external_descriptors,
    write_descriptors,
)
from .geometry import (
    CameraPose,
    EvalReport,
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
from .imaging import (
    EnhanceParams,
    GrayImage,
    bilateral,
    clahe,
    enhance,
    invert_affine,
    read_image,
    read_pgm,
    read_ppm,
    round_half_up,
    warp_affine,
    write_pgm,
)
from .matching import (
    Match,
    dedupe,
    knn_match,
    knn_match_hamming_mix,
    read_matches,
    write_matches,
)
from .mser import MserParams, Region, RegionMap, mser_segment, region_at
from .pipeline import AugmentedFeatures, build_augmented_features, match_pipeline
from .region_desc import (
    FUSED_EXTRA_DIM,
    HIST_BINS,
    FusedDescriptor,
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

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "RegionFeatError",
    "InvalidParameterError",
    "ParseError",
    "DegenerateRegionError",
    "ClassificationFailedError",
    "EstimationFailedError",
    "ConfigurationError",
    # imaging
    "GrayImage",
    "EnhanceParams",
    "read_pgm",
    "read_ppm",
    "read_image",
    "write_pgm",
    "round_half_up",
    "clahe",
    "bilateral",
    "enhance",
    "warp_affine",
    "invert_affine",
    # affine simulation
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
    # features
    "Keypoint",
    "FeatureSet",
    "BINARY_FAMILIES",
    "DESCRIPTOR_DIM",
    "detect_keypoints",
    "detect_and_describe",
    "compute_base_descriptor",
    "compute_base_descriptors",
    "write_descriptors",
    "load_external_descriptors",
    # regions
    "MserParams",
    "Region",
    "RegionMap",
    "mser_segment",
    "region_at",
    "RegionSignature",
    "FusedDescriptor",
    "HIST_BINS",
    "FUSED_EXTRA_DIM",
    "region_histogram",
    "normalize_coords",
    "centroid_orientation",
    "region_signature",
    "relative_position",
    "write_fused_descriptors",
    "fuse",
    "default_weights",
    # matching and pipeline
    "Match",
    "knn_match",
    "knn_match_hamming_mix",
    "dedupe",
    "write_matches",
    "read_matches",
    "AugmentedFeatures",
    "build_augmented_features",
    "match_pipeline",
    # geometry
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
    # config and bench
    "ToolConfig",
    "dump_config",
    "parse_config_file",
    "build_config",
    "PairResult",
    "CSV_HEADER",
    "detect_dataset",
    "run_bench",
    "results_to_csv",
]
