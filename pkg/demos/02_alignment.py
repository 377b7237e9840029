"""
Lining up two recordings
========================

The reference runs at 120 fps, the candidate at 30 fps and six frames late,
and its distances read 12 mm long. Alignment resamples the reference onto
the candidate clock, finds the lag, crops, and removes the constant offset.
"""

from handval.alignment import align
from handval.kinematics import IFT_TT
from handval.pipeline import task_distances
from handval.synth import DegradationSpec, MotionSpec, make_pair

motion = MotionSpec("SFT", bpm=75, tempo_jitter=0.03, seed=1)
entry = make_pair(motion, DegradationSpec(noise_sigma_mm=2.0, lag_samples=6, offset_mm=12.0, seed=2), "demo")

ref = task_distances(entry.gold)[IFT_TT]
cand = task_distances(entry.degraded)[IFT_TT]
print(f"reference: {len(ref)} samples at {ref.fps:g} fps")
print(f"candidate: {len(cand)} samples at {cand.fps:g} fps")

result = align(ref, cand)
print("lag:", result.lag_samples, "samples =", result.lag_seconds, "s")
# the reference is shifted, so an excess in the candidate comes back negated
print(f"vertical offset: {result.vertical_offset:.3f} mm (injected +12 mm in the candidate)")
print("aligned pair length:", len(result.aligned_reference))
