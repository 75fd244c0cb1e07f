"""Sifted QBER versus channel depolarization, with and without intercept-resend."""

import argparse

from biququart.detection import NoiseModel
from biququart.qkd import SessionConfig, run_session

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--rounds", type=int, default=30_000)
parser.add_argument("--seed", type=int, default=1)
args = parser.parse_args()

print("depolarization, qber, qber_with_eve, sift_ratio")
for p in (0.0, 0.1, 0.25, 0.5, 0.75, 1.0):
    cfg = SessionConfig(args.rounds, noise=NoiseModel(depolarization=p), seed=args.seed)
    plain = run_session(cfg)[1]
    eve = run_session(cfg, eve_bases=cfg.bases_in_use)[1]
    print(f"{p:.2f}, {plain.qber:.4f}, {eve.qber:.4f}, {plain.sift_ratio:.4f}")
