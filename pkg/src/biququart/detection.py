"""Detection stations and tomography.

Two stations are modelled:

* the coincidence (Brown-Twiss) station used for tomography and the tilt
  scan: each arm has a quarter-wave plate, a half-wave plate and an analyzer
  transmitting H; arm 1 sees the 702 nm photon, arm 2 the 605 nm photon;
* the receiver used in the key-distribution session: basis-change plates, a
  dichroic mirror and one polarizing beam splitter per wavelength feeding
  four detectors, with coincidences taken between detector pairs.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import linalg
from .optics import (PlateSpec, Retarder, TiltConfig, dichroic_unitary, effective_spec_under_tilt,
                     half_wave, jones_from_retardance, optical_thickness, quarter_wave)
from .states import (DEFAULT_MODES, POLARIZATIONS, Basis, DensityMatrix, FrequencyModePair,
                     InvalidStateError, QuquartState, as_density)

DEFAULT_ACQUISITION_S = 30.0


def derive_rng(seed, *keys: int) -> np.random.Generator:
    """Generator for sub-stream ``keys`` of ``seed``.

    Uses ``SeedSequence(seed, spawn_key=keys)``, so the stream for a given
    (seed, keys) never depends on how many other streams were drawn.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def fmt(x: float) -> str:
    """Fixed 9-significant-digit formatting used for every emitted number."""
    s = f"{float(x):.9g}"
    return "0" if s == "-0" else s


class DetectorId(enum.Enum):
    D1 = "D1"  # V at lambda2
    D2 = "D2"  # H at lambda2
    D3 = "D3"  # V at lambda1
    D4 = "D4"  # H at lambda1

    @property
    def index(self) -> int:
        return int(self.value[1]) - 1


# outcome index (H1H2, H1V2, V1H2, V1V2) -> firing detector pair
DETECTOR_PAIRS: tuple[tuple[DetectorId, DetectorId], ...] = (
    (DetectorId.D4, DetectorId.D2),
    (DetectorId.D4, DetectorId.D1),
    (DetectorId.D3, DetectorId.D2),
    (DetectorId.D3, DetectorId.D1),
)
PAIR_INDEX = {pair: i for i, pair in enumerate(DETECTOR_PAIRS)}


def pair_label(pair) -> str:
    return f"{pair[0].value}{pair[1].value}"


@dataclass(frozen=True)
class NoiseModel:
    mean_pair_rate: float = 7.5  # pairs per second reaching the station
    accidental_rate: float = 0.0  # accidental coincidences per second
    detector_efficiency: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)  # D1..D4
    depolarization: float = 0.0

    def __post_init__(self):
        if self.mean_pair_rate < 0 or self.accidental_rate < 0:
            raise ValueError("rates must be non-negative")
        if len(self.detector_efficiency) != 4 or not all(0 <= e <= 1 for e in self.detector_efficiency):
            raise ValueError("detector_efficiency needs four values in [0, 1]")
        if not 0 <= self.depolarization <= 1:
            raise ValueError("depolarization must be in [0, 1]")

    def pair_efficiency(self, pair) -> float:
        return self.detector_efficiency[pair[0].index] * self.detector_efficiency[pair[1].index]


def channel(state, noise: NoiseModel) -> DensityMatrix:
    rho = as_density(state)
    return rho.depolarized(noise.depolarization) if noise.depolarization else rho


# --- coincidence station -------------------------------------------------

@dataclass(frozen=True)
class ArmSetting:
    quarter_deg: float
    half_deg: float

    def __post_init__(self):
        for a in (self.quarter_deg, self.half_deg):
            if not 0 <= a < 180:
                raise ValueError(f"plate angles must be in [0, 180), got {a}")

    def plates(self) -> np.ndarray:
        """Jones matrix of quarter-wave then half-wave plate."""
        return (jones_from_retardance(math.pi / 2, self.half_deg)
                @ jones_from_retardance(math.pi / 4, self.quarter_deg))

    def projection_state(self) -> np.ndarray:
        """Single-photon polarization transmitted by plates + H analyzer."""
        return linalg.frozen(self.plates().conj().T @ POLARIZATIONS["H"])


ARM_SETTINGS = {
    "H": ArmSetting(0.0, 0.0),
    "V": ArmSetting(0.0, 45.0),
    "D": ArmSetting(45.0, 22.5),
    "R": ArmSetting(45.0, 45.0),
}


@dataclass(frozen=True)
class ProjectorSetting:
    arm1: ArmSetting
    arm2: ArmSetting
    label: str = ""

    @classmethod
    def from_label(cls, label: str) -> "ProjectorSetting":
        """``"HV"`` selects H on the 702 nm arm and V on the 605 nm arm."""
        label = label.upper()
        try:
            return cls(ARM_SETTINGS[label[0]], ARM_SETTINGS[label[1]], label)
        except (KeyError, IndexError):
            raise ValueError(f"bad projector label {label!r}; letters from {''.join(ARM_SETTINGS)}") from None

    def projection_state(self) -> np.ndarray:
        return linalg.frozen(np.kron(self.arm1.projection_state(), self.arm2.projection_state()))

    def projector(self) -> np.ndarray:
        v = self.projection_state()
        return linalg.frozen(np.outer(v, v.conj()))


def coincidence_probability(state, setting: ProjectorSetting) -> float:
    """Probability that both arms transmit: ``<pi1 pi2| rho |pi1 pi2>``."""
    v = setting.projection_state()
    if isinstance(state, QuquartState):
        return float(abs(np.vdot(v, state.amplitudes)) ** 2)
    rho = as_density(state).matrix
    return float(np.real(np.vdot(v, rho @ v)))


def singles_probability(state, arm: int, polarization="H") -> float:
    """Marginal probability that arm ``arm`` (1 or 2) transmits ``polarization``.

    ``polarization`` is a label from H, V, D, A, R, L or a 2-vector.
    """
    p = POLARIZATIONS[polarization] if isinstance(polarization, str) else linalg.as_vector(polarization, 2)
    p = p / np.linalg.norm(p)
    proj = np.outer(p, p.conj())
    if arm == 1:
        op = np.kron(proj, linalg.I2)
    elif arm == 2:
        op = np.kron(linalg.I2, proj)
    else:
        raise ValueError("arm must be 1 or 2")
    rho = as_density(state).matrix
    return float(np.real(np.trace(op @ rho)))


def simulate_counts(prob: float, noise: NoiseModel, time_s: float = DEFAULT_ACQUISITION_S, seed=0,
                    detectors=(DetectorId.D4, DetectorId.D2)) -> int:
    """Poisson coincidence count for one setting.

    ``detectors`` picks the efficiency pair; behind an H analyzer on both
    arms of the coincidence station that is (D4, D2).
    """
    return int(derive_rng(seed).poisson(expected_counts(prob, noise, time_s, detectors)))


def expected_counts(prob: float, noise: NoiseModel, time_s: float = DEFAULT_ACQUISITION_S,
                    detectors=(DetectorId.D4, DetectorId.D2)) -> float:
    if not -1e-12 <= prob <= 1 + 1e-12:
        raise ValueError(f"probability out of range: {prob}")
    return (min(max(prob, 0.0), 1.0) * noise.mean_pair_rate * noise.pair_efficiency(detectors) * time_s
            + noise.accidental_rate * time_s)


# --- tomography -----------------------------------------------------------

@dataclass(frozen=True)
class CoincidenceRecord:
    setting: str
    expected: float
    counts: int
    acquisition_s: float = DEFAULT_ACQUISITION_S

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError("counts must be non-negative")

    def to_json(self) -> dict:
        return {"setting": self.setting, "expected": float(self.expected),
                "counts": int(self.counts), "acquisition_s": float(self.acquisition_s)}

    @classmethod
    def from_json(cls, data: dict) -> "CoincidenceRecord":
        return cls(data["setting"], float(data.get("expected", float("nan"))), int(data["counts"]),
                   float(data.get("acquisition_s", DEFAULT_ACQUISITION_S)))


TOMOGRAPHY_LABELS = tuple(a + b for a in "HVDR" for b in "HVDR")


def tomography_settings() -> list[ProjectorSetting]:
    """The 16 product projections {H, V, D, R} x {H, V, D, R}."""
    return [ProjectorSetting.from_label(lab) for lab in TOMOGRAPHY_LABELS]


def transfer_matrix(settings=None) -> np.ndarray:
    """Rows map the flattened density matrix to each setting's probability."""
    settings = tomography_settings() if settings is None else settings
    return np.array([s.projector().T.ravel() for s in settings])


def simulate_tomography(state, noise: NoiseModel, time_s: float = DEFAULT_ACQUISITION_S,
                        seed=0, noiseless: bool = False) -> list[CoincidenceRecord]:
    """Counts for all 16 settings; setting ``k`` draws from sub-stream ``(seed, k)``.

    With ``noiseless`` the Poisson draw is replaced by the rounded expected count.
    """
    rho = channel(state, noise)
    records = []
    for k, setting in enumerate(tomography_settings()):
        p = coincidence_probability(rho, setting)
        if noiseless:
            n = int(round(expected_counts(p, noise, time_s)))
        else:
            n = simulate_counts(p, noise, time_s, derive_rng(seed, k))
        records.append(CoincidenceRecord(setting.label, p, n, time_s))
    return records


def positivize(m: np.ndarray) -> DensityMatrix:
    """Hermitize, clip negative eigenvalues to zero, renormalize to unit trace."""
    m = (np.asarray(m, dtype=complex) + np.asarray(m, dtype=complex).conj().T) / 2
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise InvalidStateError("reconstruction has no positive part")
    w = w / w.sum()
    out = (v * w) @ v.conj().T
    return DensityMatrix((out + out.conj().T) / 2)


def _ordered_counts(records) -> np.ndarray:
    by_label = {r.setting: r.counts for r in records}
    if len(records) != 16 or set(by_label) != set(TOMOGRAPHY_LABELS):
        raise ValueError("tomography needs exactly one record for each of the 16 canonical settings")
    return np.array([by_label[lab] for lab in TOMOGRAPHY_LABELS], dtype=float)


def reconstruct(records, method: str = "linear") -> DensityMatrix:
    """Density matrix from the 16 canonical coincidence records.

    ``linear``: invert the transfer matrix on the raw counts, rescale to unit
    trace, then clip to the nearest positive matrix. ``mle``: use that as the
    starting point of a Poisson maximum-likelihood fit.
    """
    counts = _ordered_counts(records)
    if counts.sum() <= 0:
        raise ValueError("total counts are zero; nothing to reconstruct")
    a = transfer_matrix()
    if np.linalg.matrix_rank(a) < 16:
        raise np.linalg.LinAlgError("tomography transfer matrix is singular")
    x = np.linalg.solve(a, counts.astype(complex)).reshape(4, 4)
    x = (x + x.conj().T) / 2
    tr = np.trace(x).real
    if tr <= 0:
        raise ValueError("linear inversion gave a non-positive trace")
    rho = positivize(x / tr)
    if method == "linear":
        return rho
    if method == "mle":
        return _mle_refine(rho, counts, a)
    raise ValueError(f"unknown reconstruction method {method!r}")


_TRIL = np.tril_indices(4, -1)


def _cholesky_params(m: np.ndarray) -> np.ndarray:
    t = np.linalg.cholesky(m + 1e-9 * np.eye(4))
    return np.concatenate([np.real(np.diagonal(t)), t[_TRIL].real, t[_TRIL].imag])


def _from_params(p: np.ndarray) -> np.ndarray:
    t = np.diag(p[:4]).astype(complex)
    t[_TRIL] = p[4:10] + 1j * p[10:16]
    return t @ t.conj().T


def _mle_refine(rho0: DensityMatrix, counts: np.ndarray, a: np.ndarray) -> DensityMatrix:
    total = counts.sum() / max(np.real(a @ rho0.matrix.ravel()).sum(), 1e-12)

    def nll(p):
        mu = np.clip(np.real(a @ _from_params(p).ravel()), 1e-12, None)
        return float(np.sum(mu - counts * np.log(mu)))

    res = minimize(nll, _cholesky_params(rho0.matrix * total), method="L-BFGS-B")
    m = _from_params(res.x)
    return positivize(m / np.trace(m).real)


# --- four-detector receiver ----------------------------------------------

def receiver_plates(bob_basis) -> list[Retarder]:
    """Plates that rotate basis ``bob_basis`` onto H/V, in order of passage.

    The quarter-wave plate sits at 135 deg, the inverse of the 45 deg plate
    that turns H into R, so that state ``s`` of each basis ends up on outcome
    ``s``.
    """
    basis = Basis.parse(bob_basis)
    if basis is Basis.I:
        return []
    if basis is Basis.II:
        return [half_wave(22.5)]
    if basis is Basis.III:
        return [quarter_wave(135.0)]
    raise ValueError(f"the four-detector receiver only measures bases I-III, not {basis.name}")


def receiver_unitary(bob_basis) -> np.ndarray:
    u = linalg.I4
    for plate in receiver_plates(bob_basis):
        u = plate.unitary() @ u
    return linalg.frozen(u)


def outcome_probabilities(state, bob_basis) -> np.ndarray:
    """Probabilities of the four detector pairs, ordered as ``DETECTOR_PAIRS``."""
    u = receiver_unitary(bob_basis)
    if isinstance(state, QuquartState):
        p = np.abs(u @ state.amplitudes) ** 2
    else:
        rho = as_density(state).matrix
        p = np.real(np.diagonal(u @ rho @ u.conj().T))
    # rounding dust must not make a forbidden outcome possible
    p = np.where(p < 1e-15, 0.0, p)
    return p / p.sum()


def qkd_detector_outcome(state, bob_basis, seed=0) -> tuple[DetectorId, DetectorId]:
    """Sample which detector pair fires for one biphoton."""
    p = outcome_probabilities(state, bob_basis)
    k = int(derive_rng(seed).choice(4, p=p))
    return DETECTOR_PAIRS[k]


def diagonal_estimate(counts) -> np.ndarray:
    """Density-matrix diagonal from the four detector-pair counts (D4D2, D4D1, D3D2, D3D1)."""
    c = np.asarray(counts, dtype=float)
    if c.shape != (4,) or np.any(c < 0):
        raise ValueError("need four non-negative counts")
    if c.sum() <= 0:
        raise ValueError("total counts are zero")
    return c / c.sum()


def diagonal_density(counts, bob_basis) -> DensityMatrix:
    """Diagonal estimate expressed back in the computational (H/V) basis."""
    u = receiver_unitary(bob_basis)
    d = np.diag(diagonal_estimate(counts)).astype(complex)
    m = u.conj().T @ d @ u
    return DensityMatrix((m + m.conj().T) / 2)


# --- tilt scan ------------------------------------------------------------

SCAN_COLUMNS = ("theta_deg", "delta1_rad", "delta2_rad", "singles_702_norm", "coincidences_norm", "counts")


@dataclass(frozen=True)
class ScanRow:
    theta_deg: float
    delta1_rad: float
    delta2_rad: float
    singles_702_norm: float
    coincidences_norm: float
    counts: int


@dataclass(frozen=True)
class ScanConfig:
    thickness_mm: float = 3.401
    alpha_deg: float = 45.0
    material: str = "quartz"
    theta_min_deg: float = -25.0
    theta_max_deg: float = 25.0
    theta_step_deg: float = 0.1
    n_eff: float | None = None  # None: mean index of the material
    time_s: float = DEFAULT_ACQUISITION_S
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(mean_pair_rate=50.0))
    modes: FrequencyModePair = DEFAULT_MODES

    def thetas(self) -> np.ndarray:
        if self.theta_step_deg <= 0:
            raise ValueError("theta step must be positive")
        if self.theta_max_deg < self.theta_min_deg:
            raise ValueError("theta_max must be >= theta_min")
        n = int(math.floor((self.theta_max_deg - self.theta_min_deg) / self.theta_step_deg + 1e-9)) + 1
        return self.theta_min_deg + self.theta_step_deg * np.arange(n)


def tilt_scan(cfg: ScanConfig, seed=0) -> list[ScanRow]:
    """Sweep the tilt of the effective plate acting on |V1V2>.

    The station selects H on the 702 nm arm and V on the 605 nm arm; row
    ``i`` draws its counts from sub-stream ``(seed, i)``.
    """
    source = QuquartState.product("VV", cfg.modes)
    setting = ProjectorSetting.from_label("HV")
    base = PlateSpec(cfg.thickness_mm, cfg.alpha_deg, cfg.material)
    rows = []
    for i, theta in enumerate(cfg.thetas()):
        theta = float(theta)
        tilt = (TiltConfig(theta, cfg.n_eff) if cfg.n_eff is not None
                else TiltConfig.for_material(theta, cfg.material, cfg.modes))
        spec = effective_spec_under_tilt(base, tilt)
        out = channel(source.evolve(dichroic_unitary(spec, cfg.modes)), cfg.noise)
        coin = coincidence_probability(out, setting)
        rows.append(ScanRow(
            theta_deg=theta,
            delta1_rad=optical_thickness(spec, cfg.modes.lambda1),
            delta2_rad=optical_thickness(spec, cfg.modes.lambda2),
            singles_702_norm=singles_probability(out, 1, "H"),
            coincidences_norm=coin,
            counts=simulate_counts(coin, cfg.noise, cfg.time_s, derive_rng(seed, i)),
        ))
    return rows


def scan_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_COLUMNS)
    for r in rows:
        w.writerow([fmt(r.theta_deg), fmt(r.delta1_rad), fmt(r.delta2_rad),
                    fmt(r.singles_702_norm), fmt(r.coincidences_norm), str(r.counts)])
    return buf.getvalue()
