"""
Geometric scoring: homography RANSAC and calibrated epipolar accuracy
=====================================================================

Builds correspondences with known ground truth, pollutes half of them, and
shows the two evaluation paths: robust homography estimation for planar
scenes and fundamental-matrix accuracy for a calibrated stereo rig.
"""

import numpy as np

from regionfeat import (
    Match,
    accuracy_f,
    estimate_h_ransac,
    fundamental_from_pose,
    h_precision,
    relative_pose,
)

# ----------------------------------------------------------- planar scene
h_true = np.array([[0.98, 0.02, 12.0], [-0.015, 1.03, -7.0], [2e-5, -1e-5, 1.0]])
rng = np.random.default_rng(3)
src = rng.uniform(0, 500, (120, 2))
dst = np.column_stack([src, np.ones(len(src))]) @ h_true.T
dst = dst[:, :2] / dst[:, 2:]

matches = [Match(ax=a[0], ay=a[1], bx=b[0], by=b[1], distance=1.0)
           for a, b in zip(src, dst)]
junk = [Match(ax=p[0], ay=p[1], bx=q[0], by=q[1], distance=1.0)
        for p, q in zip(rng.uniform(0, 500, (120, 2)), rng.uniform(0, 500, (120, 2)))]

h_est, inliers = estimate_h_ransac(matches + junk, 2.5, iterations=2000, seed=42)
prec = h_precision(matches + junk, inliers, h_true, 2.5)
print("planar: %d of %d correspondences kept as inliers, precision %.3f"
      % (len(inliers), len(matches) + len(junk), prec))
print("estimated H (normalized):")
print(np.round(h_est / h_est[2, 2], 5))

# ------------------------------------------------------- calibrated stereo
k = np.array([[720.0, 0.0, 320.0], [0.0, 720.0, 240.0], [0.0, 0.0, 1.0]])
r1, t1 = np.eye(3), np.zeros(3)
ang = 0.15
r2 = np.array([[np.cos(ang), 0, np.sin(ang)], [0, 1, 0],
               [-np.sin(ang), 0, np.cos(ang)]])
t2 = np.array([0.8, 0.1, 0.05])

world = np.column_stack([rng.uniform(-2, 2, 60), rng.uniform(-1.5, 1.5, 60),
                         rng.uniform(5, 11, 60)])
x1 = world @ k.T
x1 = x1[:, :2] / x1[:, 2:]
x2 = (world @ r2.T + t2) @ k.T
x2 = x2[:, :2] / x2[:, 2:]
stereo = [Match(ax=a[0], ay=a[1], bx=b[0], by=b[1], distance=1.0)
          for a, b in zip(x1, x2)]

r_rel, t_rel = relative_pose(r1, t1, r2, t2)
f = fundamental_from_pose(k, k, r_rel, t_rel)
report = accuracy_f(stereo, f, (640, 480), (640, 480))
print("\nstereo: %d of %d matches under the epipolar threshold (accuracy %.3f)"
      % (report.n_correct, report.n_matches, report.accuracy))

# shuffle one side to show the score collapse on wrong correspondences
wrong = [Match(ax=m.ax, ay=m.ay, bx=w.bx, by=w.by, distance=1.0)
         for m, w in zip(stereo, stereo[1:] + stereo[:1])]
report_bad = accuracy_f(wrong, f, (640, 480), (640, 480))
print("stereo, shuffled partners: accuracy %.3f" % report_bad.accuracy)
