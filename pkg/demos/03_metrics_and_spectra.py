"""
Trajectory errors and dominant frequency
========================================
"""

import numpy as np

from handval.kinematics import DistanceSeries
from handval.metrics import pearson, prmse, rmse, spectral_features

# Tiny hand-checkable example
print("RMSE :", rmse([10.0, 20.0], [11.0, 18.0]), "cm")
print("PRMSE:", prmse([10.0, 20.0], [11.0, 18.0]), "(percent, excluded samples)")
print("rho  :", pearson([1, 2, 3, 4], [1, 3, 2, 4]))

###############################################################################
# Fingers touching drive the reference distance to zero; samples under the
# floor are left out of PRMSE and counted

print("PRMSE with contact:", prmse([0.0, 10.0], [1.0, 11.0], floor=1.0))

###############################################################################
# The periodogram peak of a 1.25 Hz tapping signal

fps = 30.0
t = np.arange(450) / fps
taps = DistanceSeries("IFT_TT", t, 60 + 40 * np.cos(2 * np.pi * 1.25 * t), fps=fps)
f = spectral_features(taps)
print(f"F_DOM {f.f_dom:.4f} Hz, POW_DOM {f.pow_dom:.1f}, resolution {f.resolution:.4f} Hz")
