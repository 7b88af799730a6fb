#!/usr/bin/env python3
"""Direct evaluation of the wear-to-appearance curves for all sixteen
classes; the table is frozen into tests/test_synthgen.cpp."""

import math

THICKNESS = 2.0
BURR_MAX = 0.25
BURR_SAT = 0.18
SHEAR_BASE = 0.30
SHEAR_SLOPE = 1.25
SHEAR_PLATEAU = 0.20
ROLLOVER_BASE = 0.08
ROLLOVER_SLOPE = 0.25
MARK_VANISH = 0.55

RADII = [0.0, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40,
         0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80]

print(f"{'class':>5} {'r_mm':>5} {'burr_mm':>20} {'shear_frac':>20} {'mark':>20}")
for i, r in enumerate(RADII):
    burr = BURR_MAX * (1.0 - math.exp(-r / BURR_SAT))
    shear = SHEAR_BASE + SHEAR_SLOPE * min(r, SHEAR_PLATEAU)
    mark = max(0.0, 1.0 - r / MARK_VANISH)
    print(f"{i:>5} {r:>5.2f} {burr:.17g} {shear:.17g} {mark:.17g}")
