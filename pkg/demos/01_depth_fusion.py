"""
From 2.5D landmarks to 3D joints
================================

A colour-only hand tracker gives pixel coordinates plus a depth relative to
the wrist. One depth reading at the wrist is enough to place every landmark
in camera space.
"""

import numpy as np

from handval.kinematics import WRIST, Intrinsics, LandmarkFrame, fuse_depth, project, uplift_frame
from handval.errors import DepthHole

camera = Intrinsics(fx=605.0, fy=605.0, cx=639.5, cy=359.5)

# A fingertip 10% further from the camera than the wrist
frame = LandmarkFrame(
    t=0.0,
    landmarks={WRIST: (639.5, 359.5, 0.0), "IFT": (700.0, 280.0, 0.1)},
    d_wrist=500.0,
    intrinsics=camera,
)
print("fused fingertip depth:", fuse_depth(frame, "IFT"), "mm")

for joint, xyz in uplift_frame(frame).items():
    print(f"{joint:>5}: {np.round(xyz, 2)} mm")

###############################################################################
# Projecting a known hand and lifting it back is lossless

rng = np.random.default_rng(0)
wrist = np.array([20.0, -40.0, 750.0])
hand = {WRIST: wrist, **{j: wrist + rng.normal(0, 50, 3) for j in ("TT", "IFT", "MT")}}
landmarks = {}
for joint, p in hand.items():
    u, v, depth = project(p, camera)
    landmarks[joint] = (float(u), float(v), 0.0 if joint == WRIST else float(depth / wrist[2] - 1))
lifted = uplift_frame(LandmarkFrame(0.0, landmarks, wrist[2], camera))
print("largest round-trip error:", max(np.abs(lifted[j] - hand[j]).max() for j in hand), "mm")

###############################################################################
# A hole in the depth map is not a zero depth

try:
    uplift_frame(LandmarkFrame(0.0, landmarks, None, camera))
except DepthHole as exc:
    print("depth hole:", exc)
