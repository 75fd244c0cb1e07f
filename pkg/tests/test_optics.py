import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biququart import linalg, optics
from biququart.optics import (ConstantBirefringence, DispersionRangeError, PlateSpec, Retarder, SWAP_PLATE,
                              TiltConfig, bell_swap_check, dichroic_unitary, effective_spec_under_tilt,
                              jones, jones_from_retardance, optical_thickness, solve_swap_thickness)
from biququart.states import QuquartState, bell_state, overlap

SYNTH = ConstantBirefringence(delta_n=0.009)


def printed_g(t1, r1, t2, r2):
    """The 4x4 plate matrix typed entry by entry from its printed closed form."""
    c = np.conj
    return np.array([
        [t1 * t2, t1 * r2, r1 * t2, r1 * r2],
        [-t1 * c(r2), t1 * c(t2), -r1 * c(r2), r1 * c(t2)],
        [-c(r1) * t2, -c(r1) * r2, c(t1) * t2, c(t1) * r2],
        [c(r1) * c(r2), -c(r1) * c(t2), -c(t1) * c(r2), c(t1) * c(t2)],
    ])


def coeffs(delta, alpha_deg):
    a = math.radians(alpha_deg)
    return (math.cos(delta) + 1j * math.sin(delta) * math.cos(2 * a), 1j * math.sin(delta) * math.sin(2 * a))


def test_optical_thickness_constant_material():
    spec = PlateSpec(3.406, 45, SYNTH)
    assert optical_thickness(spec, 702) == pytest.approx(math.pi * 0.009 * 3.406e6 / 702, rel=1e-12)
    assert optical_thickness(spec, 702) / math.pi == pytest.approx(43.6667, abs=1e-4)


def test_zero_thickness():
    assert optical_thickness(PlateSpec(0.0), 702) == 0


def test_wavelength_out_of_range():
    with pytest.raises(DispersionRangeError):
        optical_thickness(PlateSpec(1.0), 1064)


def test_quartz_is_positive_uniaxial():
    q = optics.load_material("quartz")
    for lam in np.linspace(400, 800, 41):
        assert q.n_e(lam) > q.n_o(lam) > 1


def test_quartz_birefringence_reference_value():
    # quartz n_e - n_o at the sodium D line is 0.0091
    assert -optics.load_material("quartz").birefringence(589.3) == pytest.approx(0.0091, abs=1e-4)


def test_jones_identity_and_special_cases():
    assert np.array_equal(jones_from_retardance(0.0, 30.0), np.eye(2))
    np.testing.assert_allclose(jones_from_retardance(math.pi / 2, 45), [[0, 1j], [1j, 0]], atol=1e-15)
    for alpha in (0, 17, 45, 90):
        np.testing.assert_allclose(jones_from_retardance(math.pi, alpha), -np.eye(2), atol=1e-15)


@given(st.floats(-50, 50), st.floats(0, 180))
def test_jones_coefficients_unit(delta, alpha):
    c = optics.jones_coefficients(delta, alpha)
    assert abs(abs(c.t) ** 2 + abs(c.r) ** 2 - 1) <= 1e-12


def test_printed_matrix_matches_kron(rng):
    for _ in range(100):
        d1, d2 = rng.uniform(-60, 60, size=2)
        alpha = rng.uniform(0, 180)
        t1, r1 = coeffs(d1, alpha)
        t2, r2 = coeffs(d2, alpha)
        g = Retarder(d1, d2, alpha).unitary()
        assert np.max(np.abs(g - printed_g(t1, r1, t2, r2))) <= 1e-12
        assert linalg.unitarity_error(g) <= 1e-12


def test_physical_plate_factorizes(rng):
    for _ in range(20):
        spec = PlateSpec(rng.uniform(0.1, 5), rng.uniform(0, 180))
        g = dichroic_unitary(spec)
        assert np.max(np.abs(g - np.kron(jones(spec, 702), jones(spec, 605)))) <= 1e-12
        assert linalg.is_unitary(g)


def test_swap_plate_is_permutation_up_to_phase():
    perm = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
    g = SWAP_PLATE.unitary()
    assert linalg.equal_up_to_phase(g, perm)
    np.testing.assert_allclose(np.abs(g), perm, atol=1e-15)
    out = g @ np.array([0, 0, 0, 1])
    assert abs(abs(out[1]) - 1) <= 1e-12


def test_zero_retardance_is_identity():
    assert np.array_equal(Retarder(0, 0, 33).unitary(), np.eye(4))


def test_tilt():
    spec = PlateSpec(3.401)
    assert effective_spec_under_tilt(spec, TiltConfig(0.0)) == spec
    h = effective_spec_under_tilt(spec, TiltConfig(30.0, 1.55)).thickness_mm
    assert h / 3.401 == pytest.approx(1 / math.sqrt(1 - (0.5 / 1.55) ** 2), rel=1e-14)
    assert h / 3.401 == pytest.approx(1.056477, abs=1e-6)


def test_tilt_monotone():
    hs = [effective_spec_under_tilt(PlateSpec(1.0), TiltConfig(t, 1.545)).thickness_mm
          for t in np.linspace(0.01, 59.9, 300)]
    assert np.all(np.diff(hs) > 0)
    assert effective_spec_under_tilt(PlateSpec(1.0), TiltConfig(-20)) == effective_spec_under_tilt(
        PlateSpec(1.0), TiltConfig(20))


def test_tilt_limit():
    with pytest.raises(ValueError):
        TiltConfig(60.0)


def test_bell_swap_check_swap_plate():
    res = bell_swap_check(SWAP_PLATE)
    assert res
    assert res.mapping["phi+"][0] == "psi+"
    assert res.mapping["phi-"][0] == "psi-"
    assert res.mapping["psi+"][0] == "phi+"
    assert res.mapping["psi-"][0] == "phi-"


def test_bell_swap_check_identity_false():
    assert not bell_swap_check(Retarder(0, 0, 45))


def test_swap_plate_twice_returns_bell_state():
    g = SWAP_PLATE.unitary()
    for kind in ("phi+", "phi-", "psi+", "psi-"):
        b = bell_state(kind)
        assert abs(abs(overlap(b, b.evolve(g @ g))) - 1) <= 1e-12


def test_non_dichroic_plate_commutes_with_collective_rotations(rng):
    for _ in range(20):
        d, a = rng.uniform(0, 7), rng.uniform(0, 180)
        g = Retarder.achromatic(d, a).unitary()
        u = linalg.random_unitary(2, rng)
        w = jones_from_retardance(d, a)
        # a common Jones matrix on both photons is itself a collective rotation
        assert np.max(np.abs(g - np.kron(w, w))) <= 1e-12
        rot = np.kron(u, u)
        assert linalg.is_unitary(rot @ g @ rot.conj().T)


def test_solve_swap_thickness_quartz():
    best = solve_swap_thickness()[0]
    assert 3.2 <= best.thickness_mm <= 3.6
    assert best.max_error <= 0.05
    assert abs(best.thickness_mm - 3.406) <= 0.05


def test_solve_swap_thickness_constant_material_exact():
    # with no dispersion the two conditions are solved at h where dn*h/lam hits the targets
    sols = solve_swap_thickness(SYNTH, lo_mm=0.01, hi_mm=1.0, step_mm=1e-5)
    assert sols[0].max_error <= 0.1


def test_data_dir_env(tmp_path, monkeypatch):
    src = (optics.data_dir() / "quartz.txt").read_text()
    (tmp_path / "fake.txt").write_text(src.replace("name = quartz", "name = fake"))
    monkeypatch.setenv(optics.DATA_DIR_ENV, str(tmp_path))
    assert optics.load_material("fake").name == "fake"
    with pytest.raises(optics.UnknownMaterialError):
        optics.load_material("quartz")


def test_parse_dispersion_file_errors():
    with pytest.raises(ValueError):
        optics.parse_dispersion_file("name = x\no.A = 1\n")
    with pytest.raises(ValueError):
        optics.parse_dispersion_file("garbage line\n")


def test_prepare_sequence():
    out = optics.prepare(QuquartState.product("VV"), [SWAP_PLATE])
    assert out == QuquartState.product("HV")
