"""Scale-space keypoint detection and gradient-histogram description.

The built-in detector finds difference-of-Gaussian extrema over a small
pyramid (3 octaves, 3 scales per octave), refines them to sub-pixel accuracy,
rejects low-contrast and edge-like responses, and assigns each keypoint its
dominant gradient orientation. The descriptor samples a rotation- and
scale-normalized 16x16 gradient grid around the keypoint and soft-assigns it
into a 4x4 spatial by 8 orientation histogram, giving the usual 128-d vector.

All per-keypoint work is batched with numpy; a 512x512 image runs in about a
second, which matters because view simulation multiplies image count by ~20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import InvalidParameterError, ParseError
from .imaging import GrayImage

__all__ = [
    "Keypoint",
    "FeatureSet",
    "BINARY_FAMILIES",
    "detect_keypoints",
    "compute_base_descriptor",
    "compute_base_descriptors",
    "detect_and_describe",
    "write_descriptors",
    "load_external_descriptors",
]

NUM_OCTAVES = 3
SCALES_PER_OCTAVE = 3
SIGMA_BASE = 1.6
ASSUMED_BLUR = 0.5
CONTRAST_THRESHOLD = 0.03 * 255.0
EDGE_RATIO = 10.0
IMAGE_BORDER = 5
MAX_REFINE_STEPS = 5

ORI_BINS = 36
ORI_SIGMA_FACTOR = 1.5
ORI_RADIUS_FACTOR = 3.0

DESC_WIDTH = 4
DESC_ORI_BINS = 8
DESC_BIN_SCALE = 3.0
DESC_SAMPLES = 16
DESC_CLIP = 0.2
DESC_SCALE_OUT = 512.0
DESC_MAX_VALUE = 256.0

DESCRIPTOR_DIM = DESC_WIDTH * DESC_WIDTH * DESC_ORI_BINS

# Families whose base vectors are bit strings; matched by Hamming distance.
BINARY_FAMILIES = frozenset({"orb", "akaze", "brisk"})

MIN_IMAGE_SIDE = 32


@dataclass(frozen=True)
class Keypoint:
    """A detected feature: position, characteristic scale, orientation.

    ``orig_x``/``orig_y`` hold the position mapped back to the unsimulated
    image; for features detected on the original they equal ``x``/``y``.
    """

    x: float
    y: float
    scale: float
    angle: float
    view_id: int = 0
    orig_x: float = field(default=math.nan)
    orig_y: float = field(default=math.nan)

    def __post_init__(self) -> None:
        if math.isnan(self.orig_x):
            object.__setattr__(self, "orig_x", self.x)
        if math.isnan(self.orig_y):
            object.__setattr__(self, "orig_y", self.y)


@dataclass
class FeatureSet:
    """Parallel keypoint list and descriptor matrix (one row per keypoint)."""

    keypoints: list[Keypoint]
    descriptors: np.ndarray
    family: str = "builtin_grad"

    def __post_init__(self) -> None:
        if self.descriptors.ndim != 2 or self.descriptors.shape[0] != len(self.keypoints):
            raise InvalidParameterError("descriptor rows must match keypoint count")

    def __len__(self) -> int:
        return len(self.keypoints)


class _Pyramid:
    """Gaussian and difference-of-Gaussian stacks plus cached gradients."""

    def __init__(self, img: GrayImage):
        if img.width < MIN_IMAGE_SIDE or img.height < MIN_IMAGE_SIDE:
            raise InvalidParameterError(
                f"image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, "
                f"got {img.width}x{img.height}"
            )
        k = 2.0 ** (1.0 / SCALES_PER_OCTAVE)
        base = img.pixels.astype(np.float32)
        first = math.sqrt(max(SIGMA_BASE**2 - ASSUMED_BLUR**2, 0.01))
        base = ndimage.gaussian_filter(base, first, mode="nearest")

        # Incremental blurs between consecutive layers within an octave.
        self.sigmas = [SIGMA_BASE * k**i for i in range(SCALES_PER_OCTAVE + 3)]
        increments = [
            math.sqrt(self.sigmas[i] ** 2 - self.sigmas[i - 1] ** 2)
            for i in range(1, len(self.sigmas))
        ]

        self.gaussians: list[np.ndarray] = []
        self.dogs: list[np.ndarray] = []
        self._grads: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        current = base
        for octave in range(NUM_OCTAVES):
            layers = [current]
            for inc in increments:
                layers.append(ndimage.gaussian_filter(layers[-1], inc, mode="nearest"))
            stack = np.stack(layers)
            self.gaussians.append(stack)
            self.dogs.append(stack[1:] - stack[:-1])
            # Next octave starts from the layer with twice the base blur.
            nxt = layers[SCALES_PER_OCTAVE]
            current = nxt[::2, ::2].copy()
            if min(current.shape) < 2 * IMAGE_BORDER + 3:
                break
        self.n_octaves = len(self.gaussians)

    def gradients(self, octave: int, layer: int) -> tuple[np.ndarray, np.ndarray]:
        key = (octave, layer)
        if key not in self._grads:
            img = self.gaussians[octave][layer]
            gy, gx = np.gradient(img.astype(np.float64))
            self._grads[key] = (gx, gy)
        return self._grads[key]


def _find_extrema(dog: np.ndarray) -> np.ndarray:
    """Integer (layer, y, x) candidates that are 26-neighborhood extrema."""
    mx = ndimage.maximum_filter(dog, size=3, mode="nearest")
    mn = ndimage.minimum_filter(dog, size=3, mode="nearest")
    strong = np.abs(dog) > 0.5 * CONTRAST_THRESHOLD
    hits = strong & ((dog == mx) | (dog == mn))
    hits[0] = hits[-1] = False
    hits[:, :IMAGE_BORDER] = hits[:, -IMAGE_BORDER:] = False
    hits[:, :, :IMAGE_BORDER] = hits[:, :, -IMAGE_BORDER:] = False
    return np.argwhere(hits)


def _refine(dog: np.ndarray, cand: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Iterative quadratic refinement of extremum candidates.

    Returns integer locations (n, 3) and fractional offsets (n, 3), both in
    (layer, y, x) order, for candidates that converge inside the stack with
    enough contrast and acceptable edge response.
    """
    n_layers, h, w = dog.shape
    loc = cand.astype(np.int64)
    done_loc: list[np.ndarray] = []
    done_off: list[np.ndarray] = []

    for step in range(MAX_REFINE_STEPS):
        if loc.size == 0:
            break
        s, y, x = loc.T
        ds = np.array([-1, 0, 1])
        cube = dog[
            (s[:, None, None, None] + ds[:, None, None]),
            (y[:, None, None, None] + ds[None, :, None]),
            (x[:, None, None, None] + ds[None, None, :]),
        ]
        g = np.stack(
            [
                (cube[:, 2, 1, 1] - cube[:, 0, 1, 1]) / 2.0,
                (cube[:, 1, 2, 1] - cube[:, 1, 0, 1]) / 2.0,
                (cube[:, 1, 1, 2] - cube[:, 1, 1, 0]) / 2.0,
            ],
            axis=1,
        )
        c = cube[:, 1, 1, 1]
        dss = cube[:, 2, 1, 1] + cube[:, 0, 1, 1] - 2 * c
        dyy = cube[:, 1, 2, 1] + cube[:, 1, 0, 1] - 2 * c
        dxx = cube[:, 1, 1, 2] + cube[:, 1, 1, 0] - 2 * c
        dsy = (cube[:, 2, 2, 1] - cube[:, 2, 0, 1] - cube[:, 0, 2, 1] + cube[:, 0, 0, 1]) / 4.0
        dsx = (cube[:, 2, 1, 2] - cube[:, 2, 1, 0] - cube[:, 0, 1, 2] + cube[:, 0, 1, 0]) / 4.0
        dyx = (cube[:, 1, 2, 2] - cube[:, 1, 2, 0] - cube[:, 1, 0, 2] + cube[:, 1, 0, 0]) / 4.0
        hess = np.empty((len(loc), 3, 3))
        hess[:, 0, 0] = dss
        hess[:, 1, 1] = dyy
        hess[:, 2, 2] = dxx
        hess[:, 0, 1] = hess[:, 1, 0] = dsy
        hess[:, 0, 2] = hess[:, 2, 0] = dsx
        hess[:, 1, 2] = hess[:, 2, 1] = dyx

        solvable = np.abs(np.linalg.det(hess)) > 1e-12
        off = np.zeros_like(g)
        if solvable.any():
            off[solvable] = np.linalg.solve(hess[solvable], -g[solvable][..., None])[..., 0]

        converged = solvable & np.all(np.abs(off) <= 0.5, axis=1)
        if converged.any():
            keep = converged.copy()
            # Contrast at the refined position.
            value = c[keep] + 0.5 * np.einsum("ij,ij->i", g[keep], off[keep])
            keep_idx = np.flatnonzero(converged)
            contrast_ok = np.abs(value) >= CONTRAST_THRESHOLD
            # Edge response from the spatial Hessian at the integer location.
            tr = dyy[keep_idx] + dxx[keep_idx]
            det = dyy[keep_idx] * dxx[keep_idx] - dyx[keep_idx] ** 2
            edge_ok = (det > 0) & (tr**2 / np.where(det > 0, det, 1.0) < (EDGE_RATIO + 1) ** 2 / EDGE_RATIO)
            final = keep_idx[contrast_ok & edge_ok]
            done_loc.append(loc[final])
            done_off.append(off[final])

        moving = solvable & ~converged
        if step == MAX_REFINE_STEPS - 1:
            break
        loc = loc[moving] + np.rint(off[moving]).astype(np.int64)
        inside = (
            (loc[:, 0] >= 1)
            & (loc[:, 0] <= n_layers - 2)
            & (loc[:, 1] >= IMAGE_BORDER)
            & (loc[:, 1] <= h - 1 - IMAGE_BORDER)
            & (loc[:, 2] >= IMAGE_BORDER)
            & (loc[:, 2] <= w - 1 - IMAGE_BORDER)
        )
        loc = loc[inside]
        # A candidate can revisit the same cell; the extremum test already
        # bounded the walk, so duplicates are simply re-refined.

    if not done_loc:
        return np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3))
    return np.concatenate(done_loc), np.concatenate(done_off)


def _smooth_circular(hist: np.ndarray, passes: int = 6) -> np.ndarray:
    for _ in range(passes):
        hist = (np.roll(hist, 1, axis=-1) + hist + np.roll(hist, -1, axis=-1)) / 3.0
    return hist


def _orientations(pyr: _Pyramid, octave: int, layer: np.ndarray, x: np.ndarray,
                  y: np.ndarray, sigma_oct: np.ndarray) -> np.ndarray:
    """Dominant gradient orientation per keypoint, batched per layer."""
    angles = np.zeros(len(x))
    for lyr in np.unique(layer):
        idx = np.flatnonzero(layer == lyr)
        gx, gy = pyr.gradients(octave, int(lyr))
        h, w = gx.shape
        sig = ORI_SIGMA_FACTOR * sigma_oct[idx]
        radius = np.rint(ORI_RADIUS_FACTOR * sig).astype(np.int64)
        rmax = int(radius.max())
        span = np.arange(-rmax, rmax + 1)
        dx = span[None, None, :]
        dy = span[None, :, None]
        px = np.rint(x[idx])[:, None, None].astype(np.int64) + dx
        py = np.rint(y[idx])[:, None, None].astype(np.int64) + dy
        valid = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        dist2 = (dx.astype(np.float64)) ** 2 + (dy.astype(np.float64)) ** 2
        valid = valid & (dist2 <= (radius[:, None, None].astype(np.float64)) ** 2)
        pxc = np.clip(px, 0, w - 1)
        pyc = np.clip(py, 0, h - 1)
        sgx = gx[pyc, pxc]
        sgy = gy[pyc, pxc]
        mag = np.hypot(sgx, sgy)
        weight = np.exp(-dist2 / (2.0 * sig[:, None, None] ** 2)) * mag * valid
        ori = np.mod(np.arctan2(sgy, sgx), 2.0 * math.pi)
        bins = np.minimum((ori / (2.0 * math.pi) * ORI_BINS).astype(np.int64), ORI_BINS - 1)
        flat = np.arange(len(idx))[:, None, None] * ORI_BINS + bins
        hist = np.bincount(flat.ravel(), weights=weight.ravel(),
                           minlength=len(idx) * ORI_BINS).reshape(len(idx), ORI_BINS)
        hist = _smooth_circular(hist)
        peak = np.argmax(hist, axis=1)
        left = hist[np.arange(len(idx)), (peak - 1) % ORI_BINS]
        right = hist[np.arange(len(idx)), (peak + 1) % ORI_BINS]
        center = hist[np.arange(len(idx)), peak]
        denom = left - 2.0 * center + right
        shift = np.where(np.abs(denom) > 1e-12, 0.5 * (left - right) / np.where(denom == 0, 1.0, denom), 0.0)
        angles[idx] = np.mod((peak + 0.5 + shift) * (2.0 * math.pi / ORI_BINS), 2.0 * math.pi)
    return angles


def _describe_group(pyr: _Pyramid, octave: int, layer: np.ndarray, x: np.ndarray,
                    y: np.ndarray, sigma_oct: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """128-d descriptors for keypoints sharing an octave, batched per layer.

    Gradients are sampled on a fixed 16x16 grid in the rotated, scale
    normalized frame and soft-assigned (trilinear) into 4x4 spatial bins of
    8 orientations each.
    """
    n = len(x)
    out = np.zeros((n, DESCRIPTOR_DIM))
    # Grid coordinates in spatial-bin units, centered on the keypoint.
    step = np.arange(DESC_SAMPLES)
    u_units = (step + 0.5) * (DESC_WIDTH / DESC_SAMPLES) - DESC_WIDTH / 2.0
    uu, vv = np.meshgrid(u_units, u_units, indexing="xy")
    uu = uu.ravel()
    vv = vv.ravel()
    gauss = np.exp(-(uu**2 + vv**2) / (2.0 * (0.5 * DESC_WIDTH) ** 2))

    for lyr in np.unique(layer):
        idx = np.flatnonzero(layer == lyr)
        gx, gy = pyr.gradients(octave, int(lyr))
        h, w = gx.shape
        hist_width = DESC_BIN_SCALE * sigma_oct[idx]
        ca = np.cos(angle[idx])[:, None]
        sa = np.sin(angle[idx])[:, None]
        du = uu[None, :] * hist_width[:, None]
        dv = vv[None, :] * hist_width[:, None]
        px = x[idx][:, None] + ca * du - sa * dv
        py = y[idx][:, None] + sa * du + ca * dv

        x0 = np.floor(px).astype(np.int64)
        y0 = np.floor(py).astype(np.int64)
        fx = px - x0
        fy = py - y0
        valid = (x0 >= 0) & (x0 < w - 1) & (y0 >= 0) & (y0 < h - 1)
        x0c = np.clip(x0, 0, w - 2)
        y0c = np.clip(y0, 0, h - 2)

        def bilinear(img: np.ndarray) -> np.ndarray:
            tl = img[y0c, x0c]
            tr = img[y0c, x0c + 1]
            bl = img[y0c + 1, x0c]
            br = img[y0c + 1, x0c + 1]
            return (
                tl * (1 - fx) * (1 - fy)
                + tr * fx * (1 - fy)
                + bl * (1 - fx) * fy
                + br * fx * fy
            )

        sgx = bilinear(gx)
        sgy = bilinear(gy)
        mag = np.hypot(sgx, sgy) * gauss[None, :] * valid
        rel = np.mod(np.arctan2(sgy, sgx) - angle[idx][:, None], 2.0 * math.pi)
        obin = rel / (2.0 * math.pi) * DESC_ORI_BINS

        # Spatial bin coordinates depend only on the fixed sample grid.
        ub = uu + (DESC_WIDTH / 2.0 - 0.5)
        vb = vv + (DESC_WIDTH / 2.0 - 0.5)
        u0 = np.floor(ub).astype(np.int64)
        v0 = np.floor(vb).astype(np.int64)
        o0 = np.floor(obin).astype(np.int64)
        fu = ub - u0
        fv = vb - v0
        fo = obin - o0

        rows = np.broadcast_to(idx[:, None], mag.shape)
        acc = np.zeros(n * DESCRIPTOR_DIM)
        for du_bin in (0, 1):
            wu = np.where(du_bin == 0, 1 - fu, fu)
            cu = u0 + du_bin
            u_ok = (cu >= 0) & (cu < DESC_WIDTH)
            for dv_bin in (0, 1):
                wv = np.where(dv_bin == 0, 1 - fv, fv)
                cv = v0 + dv_bin
                v_ok = (cv >= 0) & (cv < DESC_WIDTH)
                for do_bin in (0, 1):
                    wo = np.where(do_bin == 0, 1 - fo, fo)
                    co = (o0 + do_bin) % DESC_ORI_BINS
                    wgt = mag * wu * wv * wo
                    ok = u_ok & v_ok & (wgt > 0)
                    flat = (
                        rows * DESCRIPTOR_DIM
                        + (np.clip(cv, 0, DESC_WIDTH - 1) * DESC_WIDTH
                           + np.clip(cu, 0, DESC_WIDTH - 1)) * DESC_ORI_BINS
                        + co
                    )
                    acc += np.bincount(flat[ok].ravel(), weights=wgt[ok].ravel(),
                                       minlength=n * DESCRIPTOR_DIM)
        out += acc.reshape(n, DESCRIPTOR_DIM)

    norm = np.linalg.norm(out, axis=1, keepdims=True)
    out = out / np.maximum(norm, 1e-12)
    out = np.minimum(out, DESC_CLIP)
    norm = np.linalg.norm(out, axis=1, keepdims=True)
    out = out / np.maximum(norm, 1e-12)
    return np.minimum(out * DESC_SCALE_OUT, DESC_MAX_VALUE).astype(np.float32)


@dataclass
class _RawDetections:
    octave: int
    layer: np.ndarray
    x_oct: np.ndarray
    y_oct: np.ndarray
    sigma_oct: np.ndarray
    scale_cont: np.ndarray


def _detect_raw(pyr: _Pyramid) -> list[_RawDetections]:
    groups: list[_RawDetections] = []
    for octave in range(pyr.n_octaves):
        cand = _find_extrema(pyr.dogs[octave])
        loc, off = _refine(pyr.dogs[octave], cand)
        if len(loc) == 0:
            continue
        layer = loc[:, 0]
        y = loc[:, 1] + off[:, 1]
        x = loc[:, 2] + off[:, 2]
        scale_cont = layer + off[:, 0]
        sigma_oct = SIGMA_BASE * 2.0 ** (scale_cont / SCALES_PER_OCTAVE)
        order = np.lexsort((x, y, scale_cont))
        groups.append(
            _RawDetections(
                octave=octave,
                layer=layer[order],
                x_oct=x[order],
                y_oct=y[order],
                sigma_oct=sigma_oct[order],
                scale_cont=scale_cont[order],
            )
        )
    return groups


def detect_keypoints(img: GrayImage) -> list[Keypoint]:
    """Detect scale-space keypoints with sub-pixel refinement.

    Raises InvalidParameterError for images smaller than 32x32.
    """
    return detect_and_describe(img, _describe=False).keypoints


def detect_and_describe(img: GrayImage, _describe: bool = True) -> FeatureSet:
    """Detect keypoints and compute their descriptors in one pyramid pass."""
    pyr = _Pyramid(img)
    groups = _detect_raw(pyr)
    keypoints: list[Keypoint] = []
    blocks: list[np.ndarray] = []
    for grp in groups:
        angle = _orientations(pyr, grp.octave, grp.layer, grp.x_oct, grp.y_oct, grp.sigma_oct)
        factor = 2.0**grp.octave
        sigma_full = grp.sigma_oct * factor
        for i in range(len(grp.layer)):
            keypoints.append(
                Keypoint(
                    x=float(grp.x_oct[i] * factor),
                    y=float(grp.y_oct[i] * factor),
                    scale=float(sigma_full[i]),
                    angle=float(angle[i]),
                )
            )
        if _describe:
            blocks.append(
                _describe_group(pyr, grp.octave, grp.layer, grp.x_oct, grp.y_oct,
                                grp.sigma_oct, angle)
            )
    if _describe and blocks:
        descriptors = np.concatenate(blocks)
    else:
        descriptors = np.zeros((len(keypoints), DESCRIPTOR_DIM), dtype=np.float32)
    return FeatureSet(keypoints=keypoints, descriptors=descriptors)


def compute_base_descriptor(img: GrayImage, kp: Keypoint) -> np.ndarray:
    """Descriptor for one externally supplied keypoint.

    Rebuilds the pyramid, so prefer detect_and_describe for bulk work. The
    octave and layer are reconstructed from the keypoint scale; scales
    outside the pyramid range clamp to its ends.
    """
    return compute_base_descriptors(img, [kp])[0]


def compute_base_descriptors(img: GrayImage, kps: list[Keypoint]) -> np.ndarray:
    pyr = _Pyramid(img)
    out = np.zeros((len(kps), DESCRIPTOR_DIM), dtype=np.float32)
    if not kps:
        return out
    scale = np.array([k.scale for k in kps])
    x = np.array([k.x for k in kps])
    y = np.array([k.y for k in kps])
    angle = np.array([k.angle for k in kps])
    logk = np.log2(np.maximum(scale, 1e-6) / SIGMA_BASE)
    octave = np.clip(np.floor(logk).astype(np.int64), 0, pyr.n_octaves - 1)
    cont = np.clip((logk - octave) * SCALES_PER_OCTAVE, 0.0, SCALES_PER_OCTAVE + 2.0)
    layer = np.clip(np.rint(cont).astype(np.int64), 0, SCALES_PER_OCTAVE + 2)
    for oct_id in np.unique(octave):
        sel = np.flatnonzero(octave == oct_id)
        factor = 2.0**oct_id
        out[sel] = _describe_group(
            pyr,
            int(oct_id),
            layer[sel],
            x[sel] / factor,
            y[sel] / factor,
            scale[sel] / factor,
            angle[sel],
        )
    return out


def write_descriptors(path: str | Path, feats: FeatureSet) -> None:
    """Write a feature set in the plain-text interchange format.

    Header line ``DESC <dim>`` (plus a family tag for non-builtin sets),
    then one ``x y scale angle v1..vdim`` line per feature.
    """
    lines = []
    dim = feats.descriptors.shape[1]
    header = f"DESC {dim}"
    if feats.family != "builtin_grad":
        header += f" {feats.family}"
    lines.append(header)
    for kp, row in zip(feats.keypoints, feats.descriptors):
        head = f"{kp.x:.9g} {kp.y:.9g} {kp.scale:.9g} {kp.angle:.9g}"
        body = " ".join(f"{v:.9g}" for v in row)
        lines.append(f"{head} {body}" if dim else head)
    Path(path).write_text("\n".join(lines) + "\n")


def load_external_descriptors(path: str | Path) -> FeatureSet:
    """Read a feature set from the interchange format.

    Raises ParseError (with the offending line number) for a missing or
    malformed header, non-numeric fields, or rows with the wrong value count.
    """
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("missing DESC header", path=str(path), line=1)
    head = lines[0].split()
    if head[0] != "DESC" or len(head) not in (2, 3):
        raise ParseError("malformed DESC header", path=str(path), line=1)
    try:
        dim = int(head[1])
    except ValueError:
        raise ParseError(f"bad descriptor dimension {head[1]!r}", path=str(path), line=1)
    if dim <= 0:
        raise ParseError("descriptor dimension must be positive", path=str(path), line=1)
    family = head[2] if len(head) == 3 else "external"

    kps: list[Keypoint] = []
    rows: list[np.ndarray] = []
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        # Fused exports carry a '# fused ...' annotation line after the header.
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4 + dim:
            raise ParseError(
                f"expected {4 + dim} fields, got {len(parts)}",
                path=str(path),
                line=lineno,
            )
        try:
            vals = np.array([float(p) for p in parts])
        except ValueError:
            raise ParseError("non-numeric field", path=str(path), line=lineno)
        kps.append(Keypoint(x=vals[0], y=vals[1], scale=vals[2], angle=vals[3]))
        rows.append(vals[4:])
    desc = np.array(rows, dtype=np.float32) if rows else np.zeros((0, dim), dtype=np.float32)
    return FeatureSet(keypoints=kps, descriptors=desc, family=family)
