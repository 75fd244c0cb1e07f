"""Command line front end.

    python -m biququart stokes --state VV
    python -m biququart prepare --input-state VV --delta1-pi 0.5 --delta2-pi 1
    python -m biququart scan-tilt --out scan.csv
    python -m biququart tomography --state RL --pairs 1000000 --out tomo.json
    python -m biququart qkd --rounds 10000 --eve intercept --records-out rounds.jsonl
    python -m biququart replay scan.csv.manifest.json

Every command writing ``--out`` also writes a run manifest next to it
(``<out>.manifest.json`` unless ``--manifest`` is given). ``replay`` re-runs
the recorded arguments; outputs still on disk must come out byte-identical,
missing ones are regenerated.

Exit status: 0 on success, 2 on argument errors, 1 on domain errors.
"""

from __future__ import annotations

import argparse
import os
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .detection import (NoiseModel, ScanConfig, diagonal_estimate, fmt, reconstruct, receiver_unitary,
                        scan_csv, simulate_tomography, tilt_scan)
from .optics import (PlateSpec, Retarder, TiltConfig, UnknownMaterialError, effective_spec_under_tilt,
                     optical_thickness, resolve_material)
from .polarimetry import polarization_degree_p4, stokes
from .qkd import SessionConfig, records_jsonl, run_session
from .states import (BELL_KINDS, PRODUCT_BASES, Basis, DensityMatrix, QuquartState, basis_label, basis_state,
                     bell_state, fidelity, pure_density)


class DomainError(Exception):
    pass


def _round9(x) -> float:
    x = float(x)
    return 0.0 if abs(x) < 1e-15 else float(fmt(x))


def parse_state(text: str):
    """State from a label.

    Accepted forms: product labels ``HV`` or ``H1V2``; Bell names ``phi+``,
    ``psi-``...; protocol basis states ``III:1``; ``mixed`` (I/4); or a path to
    a state JSON file.
    """
    t = text.strip()
    low = t.lower()
    if low == "mixed":
        return DensityMatrix.maximally_mixed()
    if low in BELL_KINDS:
        return bell_state(low)
    if ":" in t:
        b, _, s = t.partition(":")
        return basis_state(Basis.parse(b), int(s))
    compact = t.upper().replace("1", "").replace("2", "")
    if len(compact) == 2 and all(c in "HVDARL" for c in compact):
        return QuquartState.product(compact)
    path = Path(t)
    if path.is_file():
        return QuquartState.from_json(path.read_text())
    raise ValueError(f"cannot parse state {text!r}")


def _state_arg(text: str):
    try:
        return parse_state(text)
    except (ValueError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {v}")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if not v >= 0.0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _bases(text: str) -> tuple:
    try:
        out = tuple(Basis.parse(b) for b in text.split(",") if b.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if not out or any(b not in PRODUCT_BASES for b in out):
        raise argparse.ArgumentTypeError("bases must be a non-empty subset of I,II,III")
    return out


def _emit(args, text: str) -> list[str]:
    if args.out:
        Path(args.out).write_text(text)
        return [args.out]
    sys.stdout.write(text)
    return []


# --- commands ---------------------------------------------------------------

def cmd_stokes(args) -> list[str]:
    s = stokes(args.state)
    row = [*s.as_tuple(), polarization_degree_p4(args.state)]
    return _emit(args, "s0,s1,s2,s3,p4\n" + ",".join(fmt(x) for x in row) + "\n")


def cmd_prepare(args) -> list[str]:
    state = args.input_state
    if not isinstance(state, QuquartState):
        raise DomainError("prepare needs a pure input state")
    if args.delta1_pi is not None or args.delta2_pi is not None:
        if args.delta1_pi is None or args.delta2_pi is None:
            raise DomainError("--delta1-pi and --delta2-pi go together")
        plate = Retarder(args.delta1_pi * math.pi, args.delta2_pi * math.pi, args.alpha_deg)
        d1, d2 = plate.delta1, plate.delta2
    else:
        spec = PlateSpec(args.thickness_mm, args.alpha_deg, args.material)
        if args.tilt_deg:
            tilt = (TiltConfig(args.tilt_deg, args.n_eff) if args.n_eff
                    else TiltConfig.for_material(args.tilt_deg, args.material, state.modes))
            spec = effective_spec_under_tilt(spec, tilt)
        d1 = optical_thickness(spec, state.modes.lambda1)
        d2 = optical_thickness(spec, state.modes.lambda2)
        plate = Retarder(d1, d2, spec.alpha_deg)
    out = state.evolve(plate.unitary())
    doc = out.to_json()
    doc["plate"] = {"delta1_rad": d1, "delta2_rad": d2, "alpha_deg": args.alpha_deg}
    return _emit(args, json.dumps(doc, indent=2) + "\n")


def cmd_scan_tilt(args) -> list[str]:
    try:
        resolve_material(args.material)
    except UnknownMaterialError as exc:
        raise DomainError(str(exc))
    cfg = ScanConfig(
        thickness_mm=args.thickness_mm, alpha_deg=args.alpha_deg, material=args.material,
        theta_min_deg=args.theta_min, theta_max_deg=args.theta_max, theta_step_deg=args.theta_step,
        n_eff=args.n_eff, time_s=args.time,
        noise=NoiseModel(mean_pair_rate=args.pair_rate, accidental_rate=args.accidental_rate),
    )
    if max(abs(cfg.theta_min_deg), abs(cfg.theta_max_deg)) >= 60:
        raise DomainError("tilt range must stay inside (-60, 60) deg")
    return _emit(args, scan_csv(tilt_scan(cfg, args.seed)))


def cmd_tomography(args) -> list[str]:
    target = args.state
    rho_th = target if isinstance(target, DensityMatrix) else pure_density(target)
    noise = NoiseModel(mean_pair_rate=args.pairs / args.time, accidental_rate=args.accidental_rate,
                       depolarization=args.depolarization)
    records = simulate_tomography(rho_th, noise, args.time, args.seed, noiseless=args.noiseless)
    rho = reconstruct(records, args.method)
    report = {
        "target": args.state_label,
        "method": args.method,
        "records": [{**r.to_json(), "expected": _round9(r.expected)} for r in records],
        "rho": {"re": [[_round9(x) for x in row] for row in rho.matrix.real],
                "im": [[_round9(x) for x in row] for row in rho.matrix.imag]},
        "diagonal": [_round9(x) for x in rho.diagonal],
        "fidelity": _round9(fidelity(rho, rho_th)),
    }
    basis = _target_basis(target)
    if basis is not None:
        u = receiver_unitary(basis)
        report["target_basis"] = basis.name
        report["diagonal_in_target_basis"] = [_round9(x) for x in rho.rotated(u).diagonal]
    return _emit(args, json.dumps(report, indent=2) + "\n")


def _target_basis(target):
    if not isinstance(target, QuquartState):
        return None
    for b in PRODUCT_BASES:
        for s in range(4):
            if target == basis_state(b, s, target.modes):
                return b
    return None


def cmd_qkd(args) -> list[str]:
    cfg = SessionConfig(rounds=args.rounds, bases_in_use=args.bases,
                        noise=NoiseModel(depolarization=args.depolarization), seed=args.seed)
    eve = None if args.eve == "none" else (args.eve_bases or cfg.bases_in_use)
    records, summary = run_session(cfg, eve_bases=eve)
    written = []
    if args.records_out:
        Path(args.records_out).write_text(records_jsonl(records))
        written.append(args.records_out)
    doc = summary.to_json()
    doc["eve"] = args.eve if eve is None else {"strategy": args.eve, "bases": [b.name for b in eve]}
    return written + _emit(args, json.dumps(doc, indent=2) + "\n")


def cmd_replay(args) -> list[str]:
    manifest = json.loads(Path(args.manifest_file).read_text())
    old = os.getcwd()
    os.chdir(manifest.get("cwd", "."))
    try:
        return _replay(manifest)
    finally:
        os.chdir(old)


def _replay(manifest) -> list[str]:
    before = {}
    for p in manifest.get("outputs", []):
        path = Path(p)
        before[p] = path.read_bytes() if path.is_file() else None
    code = main(manifest["argv"])
    if code != 0:
        raise DomainError(f"replayed command exited with status {code}")
    changed = [p for p, old in before.items() if old is not None and Path(p).read_bytes() != old]
    if changed:
        raise DomainError("replay produced different output: " + ", ".join(changed))
    compared = sum(old is not None for old in before.values())
    print(f"replay: {compared} output(s) identical, {len(before) - compared} regenerated", file=sys.stderr)
    return []


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument("--out", help="write the primary output here instead of stdout")
    common.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json)")

    parser = argparse.ArgumentParser(prog="biququart", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stokes", parents=[common], help="Stokes parameters and P4 of a state")
    p.add_argument("--state", type=_state_arg, default=parse_state("VV"))
    p.set_defaults(func=cmd_stokes)

    p = sub.add_parser("prepare", parents=[common], help="send a state through a plate")
    p.add_argument("--input-state", type=_state_arg, default=parse_state("VV"))
    p.add_argument("--thickness-mm", type=_nonneg, default=3.401)
    p.add_argument("--alpha-deg", type=float, default=45.0)
    p.add_argument("--tilt-deg", type=float, default=0.0)
    p.add_argument("--n-eff", type=float, default=None)
    p.add_argument("--material", default="quartz")
    p.add_argument("--delta1-pi", type=float, default=None,
                   help="optical thickness at lambda1 in units of pi (overrides the physical plate)")
    p.add_argument("--delta2-pi", type=float, default=None)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("scan-tilt", parents=[common], help="coincidences and singles versus plate tilt")
    p.add_argument("--thickness-mm", type=_nonneg, default=3.401)
    p.add_argument("--alpha-deg", type=float, default=45.0)
    p.add_argument("--material", default="quartz")
    p.add_argument("--theta-min", type=float, default=-25.0)
    p.add_argument("--theta-max", type=float, default=25.0)
    p.add_argument("--theta-step", type=float, default=0.1)
    p.add_argument("--n-eff", type=float, default=None)
    p.add_argument("--pair-rate", type=_nonneg, default=50.0)
    p.add_argument("--accidental-rate", type=_nonneg, default=0.0)
    p.add_argument("--time", type=float, default=30.0)
    p.set_defaults(func=cmd_scan_tilt)

    p = sub.add_parser("tomography", parents=[common], help="simulate 16-setting tomography")
    p.add_argument("--state", dest="state_label", default="HV")
    p.add_argument("--pairs", type=float, default=1e6, help="mean pairs per setting")
    p.add_argument("--time", type=float, default=30.0)
    p.add_argument("--depolarization", type=_fraction, default=0.0)
    p.add_argument("--accidental-rate", type=_nonneg, default=0.0)
    p.add_argument("--method", choices=("linear", "mle"), default="linear")
    p.add_argument("--noiseless", action="store_true", help="use expected counts instead of Poisson draws")
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("qkd", parents=[common], help="run a key-distribution session")
    p.add_argument("--rounds", type=_positive_int, required=True)
    p.add_argument("--bases", type=_bases, default=PRODUCT_BASES)
    p.add_argument("--depolarization", type=_fraction, default=0.0)
    p.add_argument("--eve", choices=("none", "intercept"), default="none")
    p.add_argument("--eve-bases", type=_bases, default=None)
    p.add_argument("--records-out", help="JSON lines file, one record per round")
    p.set_defaults(func=cmd_qkd)

    p = sub.add_parser("replay", help="re-run a manifest and verify byte-identical outputs")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)
    return parser


def _jsonable(v):
    if isinstance(v, Basis):
        return v.name
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (QuquartState, DensityMatrix)):
        return v.to_json()
    return v


def write_manifest(args, argv: list[str], outputs: list[str]) -> str | None:
    path = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    if path is None:
        return None
    params = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func",)}
    doc = {
        "tool": "biququart",
        "version": __version__,
        "command": args.command,
        "argv": argv,
        "cwd": os.getcwd(),
        "seed": args.seed,
        "parameters": params,
        "outputs": outputs,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "tomography":
        try:
            args.state = parse_state(args.state_label)
        except ValueError as exc:
            parser.error(str(exc))
    try:
        outputs = args.func(args)
    except (DomainError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command != "replay":
        write_manifest(args, argv, outputs)
    return 0
