"""
Stable region segmentation on a synthetic blob field
====================================================

Runs the extremal-region sweep on smooth bumps, prints the surviving
regions with their stability scores, and shows they re-appear when the
image is warped by a t=2 tilt.
"""

from pathlib import Path

import numpy as np

from regionfeat import (
    GrayImage,
    MserParams,
    mser_segment,
    region_at,
    warp_affine,
    write_pgm,
)
from regionfeat.imaging import invert_affine

out = Path("demo_output")
out.mkdir(exist_ok=True)

# smooth dark and bright bumps on a mid-gray field
rng = np.random.default_rng(5)
side = 180
ys, xs = np.mgrid[0:side, 0:side]
img = np.full((side, side), 128.0)
for _ in range(7):
    cx, cy = rng.uniform(20, side - 20, 2)
    sig = rng.uniform(8, 22)
    amp = rng.uniform(-110, 110)
    img += amp * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sig * sig))
scene = GrayImage.from_array(np.clip(img, 0, 255))

params = MserParams(delta=5, max_variation=0.4, min_area=60, max_area=4000)
rmap = mser_segment(scene, params)

print("id  area  polarity  stability  bbox")
for ident, region in rmap.regions.items():
    print("%2d  %4d  %-8s  %.4f     %s"
          % (ident, region.area, region.polarity, region.stability, region.bbox))

# warp by a t=2 tilt and segment again: the stable structures survive
warped, inverse = warp_affine(scene, np.array([[0.5, 0.0, 0.0], [0.0, 1.0, 0.0]]))
forward = invert_affine(inverse)
rmap_w = mser_segment(warped, params)
recovered = 0
for region in rmap.regions.values():
    ys_r, xs_r = np.divmod(region.pixels, scene.width)
    cx = float(xs_r.mean())
    cy = float(ys_r.mean())
    wx, wy = forward[:, :2] @ np.array([cx, cy]) + forward[:, 2]
    if 0 <= wx < warped.width and 0 <= wy < warped.height:
        if region_at(rmap_w, float(wx), float(wy)) is not None:
            recovered += 1
print("regions recovered after t=2 warp: %d of %d" % (recovered, len(rmap.regions)))

write_pgm(scene, out / "regions_input.pgm")
label = (rmap.label.astype(np.int64) * 37 % 255).astype(np.uint8)
write_pgm(GrayImage(label), out / "regions_labels.pgm")
print("wrote", out / "regions_input.pgm", "and", out / "regions_labels.pgm")
