"""
Cutting a tapping trial into repetitions
========================================

Each segment runs from one distance maximum to the next and encloses one
minimum. ROM is the drop from the opening maximum to the minimum.
"""

import numpy as np

from handval.kinematics import IFT_TT
from handval.pipeline import task_distances
from handval.segmentation import SegmentationConfig, segment, segment_parameters
from handval.synth import DegradationSpec, MotionSpec, degrade, generate_trial

for bpm, profile in ((75, "Wide"), (115, "Free"), (140, "Small")):
    trial = generate_trial(MotionSpec("SFT", bpm=bpm, excursion_profile=profile, fps=30))
    segs = segment(task_distances(trial)[IFT_TT])
    roms, durs = segment_parameters(segs)
    print(f"{bpm:>3} bpm: {len(segs)} segments, ROM {np.mean(roms):.2f} cm, "
          f"DUR {np.mean(durs):.4f} s (metronome {60 / bpm:.4f} s)")

###############################################################################
# On a noisy candidate, loose thresholds count jitter as taps

noisy = degrade(generate_trial(MotionSpec("SFT", bpm=75, fps=30)), DegradationSpec(noise_sigma_mm=3.0, seed=4))
series = task_distances(noisy)[IFT_TT]
for frac, sep in ((0.02, 0.05), (0.10, 0.2)):
    n = len(segment(series, SegmentationConfig(prominence_fraction=frac, min_separation=sep)))
    print(f"prominence {frac:.2f}, separation {sep} s: {n} segments")
