"""Two-mode Stokes parameters with the frequency beats averaged out."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .states import NORM_ATOL, InvalidStateError, QuquartState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StokesVector:
    """Time-averaged Stokes parameters, in photon-number units (s0 = 2 per biphoton)."""

    s0: float
    s1: float
    s2: float
    s3: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.s0, self.s1, self.s2, self.s3)

    @property
    def polarized_length(self) -> float:
        return math.sqrt(self.s1**2 + self.s2**2 + self.s3**2)


def stokes(state: QuquartState) -> StokesVector:
    """Stokes parameters summed over both frequency modes.

    The cross terms oscillating at the difference frequency vanish after
    averaging over the detection time, leaving:

        s1 = 2(|c1|^2 - |c4|^2)
        s2 = 2 Re(c1*(c2 + c3) + c4(c2* + c3*))
        s3 = 2 Im(c1*(c2 + c3) + c4(c2* + c3*))
    """
    c1, c2, c3, c4 = state.amplitudes
    norm2 = float(np.sum(np.abs(state.amplitudes) ** 2))
    if abs(norm2 - 1.0) > 2 * NORM_ATOL:
        raise InvalidStateError("Stokes parameters need a normalized state")
    coherence = np.conj(c1) * (c2 + c3) + c4 * (np.conj(c2) + np.conj(c3))
    return StokesVector(
        s0=2.0,
        s1=2.0 * (abs(c1) ** 2 - abs(c4) ** 2),
        s2=2.0 * float(coherence.real),
        s3=2.0 * float(coherence.imag),
    )


def polarization_degree_p4(state: QuquartState) -> float:
    s = stokes(state)
    return s.polarized_length / s.s0


def polarization_degree_p3(c1p: complex, c2p: complex, c3p: complex) -> float:
    """Polarization degree of a degenerate (qutrit) biphoton.

    Evaluates sqrt(|c1'|^2 - |c3'|^2 + 2|c1'* c2' + c2'* c3'|^2) term for term.
    That radicand goes negative for states weighted toward c3' (e.g. pure
    |V,V>), where the physical degree is 1; the absolute value is taken and a
    warning is logged in that case.
    """
    c1p, c2p, c3p = complex(c1p), complex(c2p), complex(c3p)
    norm2 = abs(c1p) ** 2 + abs(c2p) ** 2 + abs(c3p) ** 2
    if abs(norm2 - 1.0) > 1e-9:
        raise InvalidStateError(f"qutrit amplitudes are not normalized (sum |c|^2 = {norm2!r})")
    radicand = abs(c1p) ** 2 - abs(c3p) ** 2 + 2 * abs(c1p.conjugate() * c2p + c2p.conjugate() * c3p) ** 2
    if radicand < 0:
        log.warning("P3 radicand is negative (%.6g) for (%s, %s, %s); using its absolute value",
                    radicand, c1p, c2p, c3p)
        radicand = -radicand
    return math.sqrt(radicand)
