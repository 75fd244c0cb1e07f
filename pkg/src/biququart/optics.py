"""Retardation plates acting on ququarts.

A plate of optical thickness ``delta`` with its optic axis at ``alpha`` from
vertical acts on one photon as

    U = [[t, r], [-r*, t*]],   t = cos(delta) + i sin(delta) cos(2 alpha),
                               r = i sin(delta) sin(2 alpha)

and ``delta = pi (n_o - n_e) h / lambda`` depends on the wavelength, so one
plate acts differently on the two photons of a non-degenerate biphoton. The
ququart unitary is the Kronecker product of the two single-photon matrices.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import linalg
from .states import DEFAULT_MODES, FrequencyModePair, QuquartState, bell_state, overlap

DATA_DIR_ENV = "QQS_DATA_DIR"
MAX_TILT_DEG = 60.0


class DispersionRangeError(ValueError):
    """Wavelength outside the validity range of a dispersion model."""


class UnknownMaterialError(ValueError):
    pass


@dataclass(frozen=True)
class DispersionModel:
    """Ordinary / extraordinary refractive indices of a uniaxial crystal."""

    name: str
    o_coeffs: tuple[float, float, float, float, float]
    e_coeffs: tuple[float, float, float, float, float]
    valid_nm: tuple[float, float] = (400.0, 800.0)
    version: str = "1"

    def _check(self, wavelength_nm: float):
        lo, hi = self.valid_nm
        if not lo <= wavelength_nm <= hi:
            raise DispersionRangeError(
                f"{self.name}: {wavelength_nm} nm outside validity range [{lo}, {hi}] nm")

    @staticmethod
    def _sellmeier(coeffs, wavelength_nm: float) -> float:
        a, b, c, d, e = coeffs
        l2 = (wavelength_nm / 1000.0) ** 2
        return math.sqrt(a + b / (1 - c / l2) + d / (1 - e / l2))

    def n_o(self, wavelength_nm: float) -> float:
        self._check(wavelength_nm)
        return self._sellmeier(self.o_coeffs, wavelength_nm)

    def n_e(self, wavelength_nm: float) -> float:
        self._check(wavelength_nm)
        return self._sellmeier(self.e_coeffs, wavelength_nm)

    def birefringence(self, wavelength_nm: float) -> float:
        """Signed ``n_o - n_e`` (negative for a positive uniaxial crystal such as quartz)."""
        return self.n_o(wavelength_nm) - self.n_e(wavelength_nm)

    def mean_index(self, wavelength_nm: float) -> float:
        return 0.5 * (self.n_o(wavelength_nm) + self.n_e(wavelength_nm))


@dataclass(frozen=True)
class ConstantBirefringence(DispersionModel):
    """Dispersion-free synthetic material: fixed ``n_o - n_e`` around a mean index."""

    name: str = "constant"
    o_coeffs: tuple = ()
    e_coeffs: tuple = ()
    delta_n: float = 0.009
    n_mean: float = 1.55

    def n_o(self, wavelength_nm: float) -> float:
        self._check(wavelength_nm)
        return self.n_mean + self.delta_n / 2

    def n_e(self, wavelength_nm: float) -> float:
        self._check(wavelength_nm)
        return self.n_mean - self.delta_n / 2


def data_dir() -> Path:
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("biququart") / "data"))


def parse_dispersion_file(text: str) -> DispersionModel:
    """Parse the ``key = value`` dispersion format (``#`` starts a comment)."""
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        kv[key] = value
    if kv.get("formula", "sellmeier2") != "sellmeier2":
        raise ValueError(f"unsupported dispersion formula {kv['formula']!r}")
    try:
        o = tuple(float(kv[f"o.{k}"]) for k in "ABCDE")
        e = tuple(float(kv[f"e.{k}"]) for k in "ABCDE")
        valid = (float(kv.get("valid_min_nm", 400)), float(kv.get("valid_max_nm", 800)))
    except KeyError as exc:
        raise ValueError(f"dispersion file is missing key {exc.args[0]!r}") from None
    return DispersionModel(kv.get("name", "unnamed"), o, e, valid, kv.get("version", "1"))


@functools.lru_cache(maxsize=None)
def _load_material(name: str, directory: str) -> DispersionModel:
    path = Path(directory) / f"{name}.txt"
    if not path.is_file():
        raise UnknownMaterialError(f"no dispersion data for {name!r} in {directory}")
    return parse_dispersion_file(path.read_text())


def load_material(name: str) -> DispersionModel:
    return _load_material(name, str(data_dir()))


def resolve_material(material) -> DispersionModel:
    if isinstance(material, DispersionModel):
        return material
    return load_material(material)


@dataclass(frozen=True)
class PlateSpec:
    """A physical birefringent plate."""

    thickness_mm: float
    alpha_deg: float = 45.0
    material: str | DispersionModel = "quartz"

    def __post_init__(self):
        if not self.thickness_mm >= 0:
            raise ValueError("plate thickness must be non-negative")


@dataclass(frozen=True)
class Retarder:
    """A plate described directly by its optical thicknesses at the two wavelengths.

    A zero-order (achromatic) plate has ``delta1 == delta2``.
    """

    delta1: float
    delta2: float
    alpha_deg: float
    label: str = ""

    @classmethod
    def achromatic(cls, delta: float, alpha_deg: float, label: str = "") -> "Retarder":
        return cls(delta, delta, alpha_deg, label)

    def unitary(self) -> np.ndarray:
        return linalg.kron(jones_from_retardance(self.delta1, self.alpha_deg),
                           jones_from_retardance(self.delta2, self.alpha_deg))


def half_wave(alpha_deg: float) -> Retarder:
    return Retarder.achromatic(math.pi / 2, alpha_deg, f"HWP@{alpha_deg:g}")


def quarter_wave(alpha_deg: float) -> Retarder:
    return Retarder.achromatic(math.pi / 4, alpha_deg, f"QWP@{alpha_deg:g}")


# half-wave at lambda1, full-wave at lambda2, axis at 45 deg: |V1V2> -> |H1V2>
SWAP_PLATE = Retarder(math.pi / 2, math.pi, 45.0, "dichroic swap")


@dataclass(frozen=True)
class JonesCoefficients:
    t: complex
    r: complex

    def matrix(self) -> np.ndarray:
        t, r = self.t, self.r
        return linalg.frozen([[t, r], [-r.conjugate(), t.conjugate()]])


def jones_coefficients(delta: float, alpha_deg: float) -> JonesCoefficients:
    two_alpha = 2 * math.radians(alpha_deg)
    return JonesCoefficients(
        t=complex(math.cos(delta), math.sin(delta) * math.cos(two_alpha)),
        r=complex(0.0, math.sin(delta) * math.sin(two_alpha)),
    )


def jones_from_retardance(delta: float, alpha_deg: float) -> np.ndarray:
    return jones_coefficients(delta, alpha_deg).matrix()


def optical_thickness(spec: PlateSpec, wavelength_nm: float) -> float:
    """``pi (n_o - n_e) h / lambda`` in radians, with the sign of the birefringence kept."""
    model = resolve_material(spec.material)
    dn = model.birefringence(wavelength_nm)
    return math.pi * dn * spec.thickness_mm * 1e6 / wavelength_nm


def jones(spec: PlateSpec, wavelength_nm: float) -> np.ndarray:
    return jones_from_retardance(optical_thickness(spec, wavelength_nm), spec.alpha_deg)


def retarder_for(spec: PlateSpec, modes: FrequencyModePair = DEFAULT_MODES) -> Retarder:
    return Retarder(optical_thickness(spec, modes.lambda1), optical_thickness(spec, modes.lambda2),
                    spec.alpha_deg, f"{spec.thickness_mm:g} mm")


def dichroic_unitary(spec: PlateSpec | Retarder, modes: FrequencyModePair = DEFAULT_MODES) -> np.ndarray:
    if isinstance(spec, Retarder):
        return spec.unitary()
    return linalg.kron(jones(spec, modes.lambda1), jones(spec, modes.lambda2))


@dataclass(frozen=True)
class TiltConfig:
    theta_deg: float
    n_eff: float = 1.545

    def __post_init__(self):
        if not abs(self.theta_deg) < MAX_TILT_DEG:
            raise ValueError(f"tilt must satisfy |theta| < {MAX_TILT_DEG} deg, got {self.theta_deg}")
        if not self.n_eff >= 1.0:
            raise ValueError("effective index must be >= 1")

    @classmethod
    def for_material(cls, theta_deg: float, material="quartz",
                     modes: FrequencyModePair = DEFAULT_MODES) -> "TiltConfig":
        """Tilt with the refraction index taken as (n_o + n_e)/2 averaged over both modes."""
        model = resolve_material(material)
        n = 0.5 * (model.mean_index(modes.lambda1) + model.mean_index(modes.lambda2))
        return cls(theta_deg, n)


def tilt_path_factor(tilt: TiltConfig) -> float:
    """Geometric path length through a tilted plate, in units of its thickness."""
    theta_r = math.asin(math.sin(math.radians(tilt.theta_deg)) / tilt.n_eff)
    return 1.0 / math.cos(theta_r)


def effective_spec_under_tilt(spec: PlateSpec, tilt: TiltConfig) -> PlateSpec:
    return replace(spec, thickness_mm=spec.thickness_mm * tilt_path_factor(tilt))


@dataclass(frozen=True)
class BellSwapResult:
    ok: bool
    # input Bell kind -> (output Bell kind or None, |overlap|)
    mapping: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def bell_swap_check(plate: PlateSpec | Retarder | np.ndarray,
                    modes: FrequencyModePair = DEFAULT_MODES, atol: float = 1e-9) -> BellSwapResult:
    """Does the plate exchange the Phi and Psi Bell families (up to global phase)?"""
    if isinstance(plate, (PlateSpec, Retarder)):
        g = dichroic_unitary(plate, modes)
    else:
        g = linalg.as_matrix(plate, 4)
    kinds = ("phi+", "phi-", "psi+", "psi-")
    bells = {k: bell_state(k, modes) for k in kinds}
    mapping = {}
    ok = True
    for kind in kinds:
        out = bells[kind].evolve(g)
        target, best = None, 0.0
        for other in kinds:
            ov = abs(overlap(bells[other], out))
            if ov > best:
                target, best = other, ov
        if abs(best - 1.0) > atol:
            target = None
        mapping[kind] = (target, best)
        if target is None or target[:3] == kind[:3]:
            ok = False
    return BellSwapResult(ok, mapping)


@dataclass(frozen=True)
class ThicknessSolution:
    thickness_mm: float
    # retardance error of each mode from its target, in units of pi (half waves)
    error1: float
    error2: float
    order1: float
    order2: float

    @property
    def max_error(self) -> float:
        return max(abs(self.error1), abs(self.error2))


def _wrap(x: float) -> float:
    return x - round(x)


def solve_swap_thickness(material="quartz", modes: FrequencyModePair = DEFAULT_MODES,
                         lo_mm: float = 3.2, hi_mm: float = 3.6,
                         target1: float = 0.5, target2: float = 0.0,
                         step_mm: float = 1e-4) -> list[ThicknessSolution]:
    """Thicknesses where ``|delta|/pi`` is closest to ``target1`` at lambda1 and
    ``target2`` at lambda2 (both modulo 1).

    The defaults ask for a half-wave plate at lambda1 that is a full-wave plate
    at lambda2. Two conditions on one parameter rarely hold exactly, so every
    local minimum of the combined error in the interval is returned, best first.
    """
    model = resolve_material(material)
    k1 = abs(model.birefringence(modes.lambda1)) * 1e6 / modes.lambda1
    k2 = abs(model.birefringence(modes.lambda2)) * 1e6 / modes.lambda2

    def cost(h):
        return _wrap(k1 * h - target1) ** 2 + _wrap(k2 * h - target2) ** 2

    grid = np.arange(lo_mm, hi_mm + step_mm / 2, step_mm)
    c = np.array([cost(h) for h in grid])
    interior = np.flatnonzero((c[1:-1] <= c[:-2]) & (c[1:-1] <= c[2:])) + 1
    out = []
    for i in interior:
        res = minimize_scalar(cost, bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                              options={"xatol": 1e-9})
        h = float(res.x)
        out.append(ThicknessSolution(h, _wrap(k1 * h - target1), _wrap(k2 * h - target2), k1 * h, k2 * h))
    out.sort(key=lambda s: s.max_error)
    return out


def prepare(state: QuquartState, plates) -> QuquartState:
    """Send ``state`` through a sequence of plates (first element acts first)."""
    for plate in plates:
        state = state.evolve(dichroic_unitary(plate, state.modes))
    return state
