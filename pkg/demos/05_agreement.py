"""
Agreement between two measurement systems
=========================================
"""

import numpy as np

from handval.agreement import ICC_FORM, agreement_report, bland_altman, ccc, icc

print(ccc([1, 2, 3], [2, 3, 4]))
print("4/7 =", 4 / 7)

# Constant bias: consistency is perfect but absolute agreement is not
x = np.arange(1.0, 7.0)
print(ICC_FORM)
print("ICC(x, x + 2) =", icc(x, x + 2).value, "(7/11 =", 7 / 11, ")")

###############################################################################
# A full report for simulated ROM values

rng = np.random.default_rng(0)
ref = rng.normal(7.0, 1.5, 200)
cand = ref + rng.normal(0.2, 0.4, 200)
rep = agreement_report("ROM", ref, cand)
ba = rep.bland_altman
print(f"bias {ba.bias:.3f} cm, limits [{ba.loa_low:.3f}, {ba.loa_high:.3f}], {ba.pct_within:.1f}% within")
for c in (rep.icc, rep.ccc):
    print(f"{c.kind}: {c.value:.3f} [{c.ci_low:.3f}, {c.ci_high:.3f}] high={c.high_agreement}")

print(bland_altman([0, 0, 0], [-1, 0, 1]))
