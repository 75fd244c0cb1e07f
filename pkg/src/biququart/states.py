"""Biphoton polarization ququart states.

Amplitudes are ordered ``(H1H2, H1V2, V1H2, V1V2)``; photon 1 is the
``lambda1`` mode (702 nm by default), photon 2 the ``lambda2`` mode (605 nm).
Circular polarizations follow ``R = (H + iV)/sqrt(2)``, ``L = (H - iV)/sqrt(2)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg

NORM_ATOL = 1e-12
COMPARE_ATOL = 1e-9

# trace / positivity tolerance for reconstructed matrices
DENSITY_ATOL = 1e-9
HERMITIAN_ATOL = 1e-12

_S = 1 / math.sqrt(2)

# single-photon polarization vectors in the (H, V) basis
POLARIZATIONS: dict[str, np.ndarray] = {
    "H": linalg.frozen([1, 0]),
    "V": linalg.frozen([0, 1]),
    "D": linalg.frozen([_S, _S]),
    "A": linalg.frozen([_S, -_S]),
    "R": linalg.frozen([_S, 1j * _S]),
    "L": linalg.frozen([_S, -1j * _S]),
}


class InvalidStateError(ValueError):
    """A state or density matrix violates its invariants."""


class ModeMismatchError(ValueError):
    """Two states live on different frequency-mode pairs."""


class Basis(enum.IntEnum):
    I = 1
    II = 2
    III = 3
    IV = 4
    V = 5

    @classmethod
    def parse(cls, value) -> "Basis":
        if isinstance(value, Basis):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            if key in cls.__members__:
                return cls[key]
            if key.isdigit():
                value = int(key)
        try:
            return cls(int(value))
        except (ValueError, TypeError):
            raise ValueError(f"unknown basis {value!r}; expected one of I, II, III, IV, V") from None


PRODUCT_BASES = (Basis.I, Basis.II, Basis.III)

# (photon-1 label, photon-2 label) for the product bases
_PRODUCT_LABELS = {
    Basis.I: ("HH", "HV", "VH", "VV"),
    Basis.II: ("DD", "DA", "AD", "AA"),
    Basis.III: ("RR", "RL", "LR", "LL"),
}

# entangled bases: (first product, second product, sign)
_ENTANGLED_TERMS = {
    Basis.IV: (("RH", "LV", 1), ("RH", "LV", -1), ("LH", "RV", 1), ("LH", "RV", -1)),
    Basis.V: (("HR", "VL", 1), ("HR", "VL", -1), ("HL", "VR", 1), ("HL", "VR", -1)),
}


@dataclass(frozen=True)
class FrequencyModePair:
    """Central wavelengths of the two down-converted photons, in nm."""

    lambda1: float = 702.0
    lambda2: float = 605.0

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("wavelengths must be positive")
        if self.lambda1 == self.lambda2:
            raise ValueError("the two frequency modes must be distinct")

    def __iter__(self):
        return iter((self.lambda1, self.lambda2))


DEFAULT_MODES = FrequencyModePair()


def _product_amplitudes(label: str) -> np.ndarray:
    return np.kron(POLARIZATIONS[label[0]], POLARIZATIONS[label[1]])


@dataclass(frozen=True, eq=False)
class QuquartState:
    amplitudes: np.ndarray
    modes: FrequencyModePair = field(default=DEFAULT_MODES)

    def __post_init__(self):
        amps = linalg.as_vector(self.amplitudes, 4)
        norm = float(np.linalg.norm(amps))
        if not np.isfinite(norm):
            raise InvalidStateError("amplitudes must be finite")
        if abs(norm - 1.0) > NORM_ATOL:
            raise InvalidStateError(f"state is not normalized (norm = {norm!r})")
        object.__setattr__(self, "amplitudes", linalg.frozen(amps))

    @classmethod
    def from_amplitudes(cls, amplitudes, modes: FrequencyModePair = DEFAULT_MODES) -> "QuquartState":
        """Normalize ``amplitudes`` and build a state."""
        amps = linalg.as_vector(amplitudes, 4)
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise InvalidStateError("cannot normalize a zero or non-finite vector")
        return cls(amps / norm, modes)

    @classmethod
    def product(cls, label: str, modes: FrequencyModePair = DEFAULT_MODES) -> "QuquartState":
        """Product state from a two-letter label such as ``"RL"`` (photon 1 first)."""
        label = label.upper()
        if len(label) != 2 or any(c not in POLARIZATIONS for c in label):
            raise ValueError(f"bad product label {label!r}")
        return cls(_product_amplitudes(label), modes)

    def evolve(self, unitary) -> "QuquartState":
        return QuquartState.from_amplitudes(linalg.apply(unitary, self.amplitudes), self.modes)

    def canonical(self) -> np.ndarray:
        """Amplitudes with the global phase fixed: first nonzero entry real positive."""
        amps = np.array(self.amplitudes)
        nz = np.flatnonzero(np.abs(amps) > COMPARE_ATOL)
        if nz.size:
            a = amps[nz[0]]
            amps = amps * (abs(a) / a)
        # scrub rounding dust so serialized output is stable
        amps.real[np.abs(amps.real) < 1e-15] = 0.0
        amps.imag[np.abs(amps.imag) < 1e-15] = 0.0
        return linalg.frozen(amps)

    def same_as(self, other: "QuquartState", atol: float = COMPARE_ATOL) -> bool:
        """Equal up to a global phase: align the phase via <other|self>, then compare entrywise."""
        if self.modes != other.modes:
            return False
        ov = np.vdot(other.amplitudes, self.amplitudes)
        if abs(ov) == 0:
            return False
        aligned = other.amplitudes * (ov / abs(ov))
        return bool(np.max(np.abs(self.amplitudes - aligned)) <= atol)

    def __eq__(self, other):
        if not isinstance(other, QuquartState):
            return NotImplemented
        return self.same_as(other)

    __hash__ = None

    def to_json(self) -> dict:
        amps = self.canonical()
        return {
            "modes": {"lambda1": self.modes.lambda1, "lambda2": self.modes.lambda2},
            "re": [float(x) for x in amps.real],
            "im": [float(x) for x in amps.imag],
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "QuquartState":
        if isinstance(data, str):
            data = json.loads(data)
        modes = FrequencyModePair(**data.get("modes", {}))
        amps = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
        return cls.from_amplitudes(amps, modes)

    def __repr__(self):
        amps = ", ".join(f"{z.real:+.4f}{z.imag:+.4f}j" for z in self.amplitudes)
        return f"QuquartState([{amps}])"


def basis_state(basis, index: int, modes: FrequencyModePair = DEFAULT_MODES) -> QuquartState:
    """State ``index`` (0..3) of protocol basis I..V."""
    basis = Basis.parse(basis)
    if index not in range(4):
        raise ValueError(f"state index must be in 0..3, got {index!r}")
    if basis in _PRODUCT_LABELS:
        return QuquartState.product(_PRODUCT_LABELS[basis][index], modes)
    first, second, sign = _ENTANGLED_TERMS[basis][index]
    amps = (_product_amplitudes(first) + sign * _product_amplitudes(second)) * _S
    return QuquartState(amps, modes)


def basis_states(basis, modes: FrequencyModePair = DEFAULT_MODES) -> list[QuquartState]:
    return [basis_state(basis, s, modes) for s in range(4)]


def basis_label(basis, index: int) -> str:
    basis = Basis.parse(basis)
    if basis in _PRODUCT_LABELS:
        p = _PRODUCT_LABELS[basis][index]
        return f"{p[0]}1{p[1]}2"
    first, second, sign = _ENTANGLED_TERMS[basis][index]
    op = "+" if sign > 0 else "-"
    return f"{first[0]}1{first[1]}2{op}{second[0]}1{second[1]}2"


BELL_KINDS = ("phi+", "phi-", "psi+", "psi-")


def bell_state(kind: str, modes: FrequencyModePair = DEFAULT_MODES) -> QuquartState:
    kind = kind.lower().replace("φ", "phi").replace("ψ", "psi")
    patterns = {
        "phi+": (_S, 0, 0, _S),
        "phi-": (_S, 0, 0, -_S),
        "psi+": (0, _S, _S, 0),
        "psi-": (0, _S, -_S, 0),
    }
    if kind not in patterns:
        raise ValueError(f"unknown Bell state {kind!r}; expected one of {BELL_KINDS}")
    return QuquartState(np.array(patterns[kind], dtype=complex), modes)


def overlap(a: QuquartState, b: QuquartState) -> complex:
    """Inner product <a|b>."""
    if a.modes != b.modes:
        raise ModeMismatchError(f"states live on different modes: {a.modes} vs {b.modes}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduced 2x2 density matrix of photon ``keep`` (1 or 2)."""
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if keep == 1:
        return np.einsum("ijkj->ik", r)
    if keep == 2:
        return np.einsum("jijk->ik", r)
    raise ValueError("keep must be 1 or 2")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix, 4)
        if not np.all(np.isfinite(m)):
            raise InvalidStateError("density matrix has non-finite entries")
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERMITIAN_ATOL:
            raise InvalidStateError(f"density matrix is not Hermitian (error {herm:.3g})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > DENSITY_ATOL:
            raise InvalidStateError(f"density matrix trace is {tr!r}, expected 1")
        min_eig = float(np.linalg.eigvalsh(m).min())
        if min_eig < -DENSITY_ATOL:
            raise InvalidStateError(f"density matrix has negative eigenvalue {min_eig:.3g}")
        object.__setattr__(self, "matrix", linalg.frozen(m))

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(linalg.I4 / 4)

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diagonal(self.matrix)).copy()

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def rotated(self, unitary) -> "DensityMatrix":
        """``U rho U^dagger``, re-Hermitized against rounding."""
        u = linalg.as_matrix(unitary, 4)
        m = u @ self.matrix @ u.conj().T
        return DensityMatrix((m + m.conj().T) / 2)

    def depolarized(self, p: float) -> "DensityMatrix":
        if not 0.0 <= p <= 1.0:
            raise ValueError("depolarization must be in [0, 1]")
        return DensityMatrix((1 - p) * self.matrix + p * linalg.I4 / 4)

    def to_json(self) -> dict:
        return {"re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "DensityMatrix":
        return cls(np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float))


def pure_density(state: QuquartState) -> DensityMatrix:
    v = state.amplitudes
    m = np.outer(v, v.conj())
    return DensityMatrix((m + m.conj().T) / 2)


def as_density(state) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, QuquartState):
        return pure_density(state)
    raise TypeError(f"expected QuquartState or DensityMatrix, got {type(state).__name__}")


def fidelity(rho_exp: DensityMatrix, rho_th: DensityMatrix) -> float:
    """Tr(rho_th rho_exp).

    This is the plain overlap, not the Uhlmann fidelity; for a pure target it
    reduces to <psi|rho_exp|psi>.
    """
    for rho in (rho_exp, rho_th):
        if not isinstance(rho, DensityMatrix):
            raise InvalidStateError(f"expected DensityMatrix, got {type(rho).__name__}")
    return float(np.real(np.trace(rho_th.matrix @ rho_exp.matrix)))
