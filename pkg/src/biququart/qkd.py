"""Simulated key distribution with ququarts over the product bases I-III.

Alice prepares one of twelve states from |V1V2> with plates, Bob picks a
basis, rotates it onto H/V and reads which detector pair fired. Rounds where
the bases agree are kept (sifting); in those rounds the detector pair names
Alice's state unless the channel or an eavesdropper disturbed it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .detection import DETECTOR_PAIRS, NoiseModel, derive_rng, outcome_probabilities, pair_label
from .optics import Retarder, SWAP_PLATE, half_wave, quarter_wave
from .states import (DEFAULT_MODES, PRODUCT_BASES, Basis, FrequencyModePair, QuquartState, basis_state,
                     pure_density)

# basis-I state index -> plate turning |V1V2> into it (None: the source state itself)
_BASIS_I_PLATES = (
    Retarder(math.pi / 2, math.pi / 2, 45.0, "half-wave at both wavelengths"),
    SWAP_PLATE,
    Retarder(math.pi, math.pi / 2, 45.0, "full-wave at lambda1, half-wave at lambda2"),
    None,
)


def symbol_bits(symbol: int) -> str:
    return format(symbol, "02b")


@dataclass(frozen=True)
class PlateRecipe:
    plates: tuple[Retarder, ...] = ()

    def unitary(self) -> np.ndarray:
        u = linalg.I4
        for p in self.plates:
            u = p.unitary() @ u
        return linalg.frozen(u)

    def apply(self, state: QuquartState) -> QuquartState:
        return state.evolve(self.unitary())

    def describe(self) -> list[dict]:
        return [{"label": p.label, "delta1_rad": p.delta1, "delta2_rad": p.delta2, "alpha_deg": p.alpha_deg}
                for p in self.plates]


def _check_bases(bases) -> tuple[Basis, ...]:
    out = tuple(sorted({Basis.parse(b) for b in bases}))
    if not out:
        raise ValueError("at least one basis is required")
    bad = [b.name for b in out if b not in PRODUCT_BASES]
    if bad:
        raise ValueError(f"bases {bad} need entangled measurements; the receiver handles I, II, III only")
    return out


def alice_prepare(basis, index: int, bases_in_use=PRODUCT_BASES,
                  modes: FrequencyModePair = DEFAULT_MODES) -> tuple[QuquartState, PlateRecipe]:
    """Target state and the plates producing it from |V1V2>.

    A dichroic (or achromatic) plate first selects the basis-I state with the
    same index; a half-wave plate at 22.5 deg or a quarter-wave plate at 45 deg
    then carries H/V to D/A or R/L on both photons.
    """
    basis = Basis.parse(basis)
    if basis not in _check_bases(bases_in_use):
        raise ValueError(f"basis {basis.name} is not in use")
    if index not in range(4):
        raise ValueError("state index must be in 0..3")
    plates = [p for p in (_BASIS_I_PLATES[index],) if p is not None]
    if basis is Basis.II:
        plates.append(half_wave(22.5))
    elif basis is Basis.III:
        plates.append(quarter_wave(45.0))
    return basis_state(basis, index, modes), PlateRecipe(tuple(plates))


@dataclass(frozen=True)
class SessionConfig:
    rounds: int
    bases_in_use: tuple = PRODUCT_BASES
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    symbol_alphabet_bits: int = 2

    def __post_init__(self):
        if not isinstance(self.rounds, (int, np.integer)) or self.rounds <= 0:
            raise ValueError("rounds must be a positive integer")
        if self.symbol_alphabet_bits != 2:
            raise ValueError("each basis has four states; the alphabet is fixed at 2 bits")
        object.__setattr__(self, "bases_in_use", _check_bases(self.bases_in_use))


@dataclass(frozen=True)
class SessionRecord:
    round: int
    alice_basis: Basis
    alice_state: int
    bob_basis: Basis
    detector_pair: tuple
    sifted: bool
    alice_symbol: int | None
    bob_symbol: int | None
    eve_basis: Basis | None = None
    eve_state: int | None = None

    def to_json(self) -> dict:
        d = {
            "round": self.round,
            "alice_basis": self.alice_basis.name,
            "alice_state": self.alice_state,
            "bob_basis": self.bob_basis.name,
            "detectors": pair_label(self.detector_pair),
            "sifted": self.sifted,
            "alice_symbol": None if self.alice_symbol is None else symbol_bits(self.alice_symbol),
            "bob_symbol": None if self.bob_symbol is None else symbol_bits(self.bob_symbol),
        }
        if self.eve_basis is not None:
            d["eve_basis"] = self.eve_basis.name
            d["eve_state"] = self.eve_state
        return d


@dataclass(frozen=True)
class BasisStats:
    sifted: int
    errors: int

    @property
    def qber(self) -> float | None:
        return self.errors / self.sifted if self.sifted else None


@dataclass(frozen=True)
class SessionSummary:
    rounds: int
    sifted: int
    errors: int
    per_basis: dict

    @property
    def sift_ratio(self) -> float:
        return self.sifted / self.rounds

    @property
    def qber(self) -> float | None:
        """Symbol error rate over sifted rounds (None if nothing was sifted)."""
        return self.errors / self.sifted if self.sifted else None

    @property
    def raw_key_bits(self) -> int:
        return 2 * self.sifted

    def to_json(self) -> dict:
        return {
            "rounds": self.rounds,
            "sifted": self.sifted,
            "sift_ratio": self.sift_ratio,
            "errors": self.errors,
            "qber": self.qber,
            "raw_key_bits": self.raw_key_bits,
            "per_basis": {b.name: {"sifted": s.sifted, "errors": s.errors, "qber": s.qber}
                          for b, s in sorted(self.per_basis.items())},
        }


def _tables(bases, modes):
    """Born-rule outcome probabilities for every (prepared basis, state, measured basis)."""
    states = {(b, s): basis_state(b, s, modes) for b in bases for s in range(4)}
    table = {(b, s, m): outcome_probabilities(states[b, s], m)
             for (b, s) in states for m in bases}
    return table


def _sample(p: np.ndarray, u: float) -> int:
    k = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(k, 3)


def run_session(cfg: SessionConfig, eve_bases=None,
                modes: FrequencyModePair = DEFAULT_MODES) -> tuple[list[SessionRecord], SessionSummary]:
    """Run ``cfg.rounds`` rounds; fully determined by ``cfg.seed``.

    Per round: Alice's basis and state, Bob's basis, and (if ``eve_bases`` is
    given) Eve's basis are drawn uniformly; Eve measures and resends the
    state she saw; the channel depolarizes what reaches Bob.
    """
    bases = cfg.bases_in_use
    eve = _check_bases(eve_bases) if eve_bases is not None else None
    all_bases = tuple(sorted(set(bases) | set(eve or ())))
    table = _tables(all_bases, modes)
    p_dep = cfg.noise.depolarization

    rng = derive_rng(cfg.seed, 0)
    n = cfg.rounds
    a_b = rng.integers(len(bases), size=n)
    a_s = rng.integers(4, size=n)
    b_b = rng.integers(len(bases), size=n)
    e_b = rng.integers(len(eve), size=n) if eve else None
    u_eve = rng.random(n)
    u_bob = rng.random(n)

    records = []
    stats = {b: [0, 0] for b in bases}
    for i in range(n):
        ab, bb = bases[a_b[i]], bases[b_b[i]]
        sent_b, sent_s = ab, int(a_s[i])
        eb = es = None
        if eve:
            eb = eve[e_b[i]]
            es = _sample(table[sent_b, sent_s, eb], u_eve[i])
            sent_b, sent_s = eb, es
        p = table[sent_b, sent_s, bb]
        if p_dep:
            p = (1 - p_dep) * p + p_dep / 4
        k = _sample(p, u_bob[i])
        sifted = ab == bb
        if sifted:
            stats[ab][0] += 1
            stats[ab][1] += int(k != a_s[i])
        records.append(SessionRecord(
            round=i, alice_basis=ab, alice_state=int(a_s[i]), bob_basis=bb,
            detector_pair=DETECTOR_PAIRS[k], sifted=sifted,
            alice_symbol=int(a_s[i]) if sifted else None, bob_symbol=k if sifted else None,
            eve_basis=eb, eve_state=es,
        ))
    per_basis = {b: BasisStats(*v) for b, v in stats.items()}
    summary = SessionSummary(n, sum(v.sifted for v in per_basis.values()),
                             sum(v.errors for v in per_basis.values()), per_basis)
    return records, summary


def intercept_resend(cfg: SessionConfig, eve_bases) -> SessionSummary:
    return run_session(cfg, eve_bases=eve_bases)[1]


def records_jsonl(records) -> str:
    return "".join(json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in records)
