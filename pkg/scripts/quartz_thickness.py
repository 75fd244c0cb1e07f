"""Candidate quartz plate thicknesses: half-wave at 702 nm, full-wave at 605 nm."""

import argparse

from biququart.optics import load_material, solve_swap_thickness

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--lo", type=float, default=3.2)
parser.add_argument("--hi", type=float, default=3.6)
args = parser.parse_args()

q = load_material("quartz")
for lam in (605, 702):
    print(f"{lam} nm: n_o={q.n_o(lam):.6f} n_e={q.n_e(lam):.6f} n_e-n_o={-q.birefringence(lam):.6f}")
print("h_mm, |delta1|/pi, |delta2|/pi, err1, err2")
for s in solve_swap_thickness(q, lo_mm=args.lo, hi_mm=args.hi):
    print(f"{s.thickness_mm:.4f}, {s.order1:.3f}, {s.order2:.3f}, {s.error1:+.3f}, {s.error2:+.3f}")
