"""
A squeezing tracker
===================

A tracker that underestimates how far fingers open and close, while keeping
the timing right, fails on ROM but not on DUR or frequency. Compare with a
tracker that only adds noise.
"""

from handval.pipeline import aggregate, run_validation
from handval.synth import PROTOCOL_EXCURSION, DegradationSpec, MotionSpec, make_pair


def cohort(degradation):
    reports = []
    for seed in range(3):
        for bpm in (75, 115, 140):
            motion = MotionSpec("SFT", bpm=bpm, seed=seed * 1000 + bpm, tempo_jitter=0.03,
                                excursion_profile=PROTOCOL_EXCURSION[bpm])
            entry = make_pair(motion, DegradationSpec(**degradation, seed=seed), f"{bpm}_{seed}")
            reports.append(run_validation(entry.gold, entry.degraded))
    return aggregate(reports).agreement["SFT"]


for name, deg in (("squeeze 0.5", {"squeeze_factor": 0.5}), ("noise 2 mm", {"noise_sigma_mm": 2.0})):
    a = cohort(deg)
    print(f"{name}: {a['ROM'].bland_altman.pairs} segments")
    for param in ("ROM", "DUR", "F_DOM"):
        print(f"   {param:<6} ICC {a[param].icc.value:6.3f}   CCC {a[param].ccc.value:6.3f}")
