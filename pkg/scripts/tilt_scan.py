"""Coincidences and 702 nm singles versus tilt of the effective 3.401 mm plate.

Writes the scan CSV and reports the main maximum and the neighbouring
coincidence minima with the basis-I populations of the output state there.
"""

import argparse

import numpy as np

from biququart.detection import ScanConfig, outcome_probabilities, scan_csv, tilt_scan
from biququart.optics import Retarder
from biququart.states import QuquartState, basis_label

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", default="tilt_scan.csv")
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--step", type=float, default=0.05)
args = parser.parse_args()

rows = tilt_scan(ScanConfig(theta_step_deg=args.step), seed=args.seed)
with open(args.out, "w") as f:
    f.write(scan_csv(rows))

c = np.array([r.coincidences_norm for r in rows])
imax = int(np.argmax(c))
minima = [i for i in range(1, len(c) - 1) if c[i] <= c[i - 1] and c[i] <= c[i + 1]]
left = max((i for i in minima if i < imax), default=None)
right = min((i for i in minima if i > imax), default=None)
vv = QuquartState.product("VV")
print(f"main maximum at theta={rows[imax].theta_deg:.2f} deg, coincidences={c[imax]:.4f}")
for i in (left, right):
    if i is None:
        continue
    r = rows[i]
    pops = outcome_probabilities(vv.evolve(Retarder(r.delta1_rad, r.delta2_rad, 45).unitary()), "I")
    desc = ", ".join(f"{basis_label('I', k)}={p:.3f}" for k, p in enumerate(pops))
    print(f"minimum at theta={r.theta_deg:.2f} deg: {desc}")
print(f"wrote {len(rows)} rows to {args.out}")
