import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from analytic import coherent_populations, incoherent_populations, strong_field_populations
from floquet_solver import (
    DETUNED,
    RESONANT,
    ExtractionSettings,
    LinearityFailure,
    SingularGenerator,
    direct_coefficient,
    extract_coefficients,
    is_resonant,
    solve_harmonics,
    static_probe_shift,
    zeroth_order_populations,
)
from generator import build_generator, rhs
from model import ALPHA, RHO32, TRANSPOSE_INDEX, DriveConfig, LevelSystem

PUMPED = DriveConfig(omega31_mag=0.0, r1=1.0)


def test_incoherent_populations_match_rate_equations(system):
    numeric = zeroth_order_populations(system, PUMPED, "incoherent")
    assert numeric == pytest.approx(incoherent_populations(system, 1.0), rel=1e-10, abs=1e-11)
    expected = np.array([3 * ALPHA**2, 1.0, ALPHA**2]) / (1 + 4 * ALPHA**2)
    assert numeric == pytest.approx(expected, rel=1e-10, abs=1e-11)


@given(st.floats(0.0, 5.0), st.floats(-5.0, 5.0))
def test_closed_loop_populations_match_closed_form(omega, delta1):
    system = LevelSystem(gamma3=0.1)
    drive = DriveConfig(omega31_mag=omega, delta1=delta1)
    assert zeroth_order_populations(system, drive) == pytest.approx(coherent_populations(system, drive), rel=1e-9, abs=1e-12)


def test_strong_field_populations(system):
    numeric = zeroth_order_populations(system, DriveConfig(omega31_mag=1e3))
    limit = strong_field_populations(system)
    assert numeric == pytest.approx(limit, rel=1e-2)
    assert numeric[1] == pytest.approx(0.999894, abs=1e-5)


def test_zeroth_order_is_stationary(system, drive):
    gen = build_generator(system, drive.with_updates(omega32_mag=0.0, omega21_mag=0.0))
    solution = solve_harmonics(gen)
    assert np.abs(rhs(0.0, solution.r0, gen)).max() < 1e-12
    assert solution.r0.is_physical()


def test_incoherent_magnetic_coefficient(system):
    coeffs = extract_coefficients(system, PUMPED, "incoherent")
    expected = 2j * (3 * ALPHA**2 - 1) / ((1 + ALPHA**2) * (1 + 4 * ALPHA**2))
    assert coeffs.d21 == pytest.approx(expected, rel=1e-9)
    assert coeffs.d21.imag == pytest.approx(-1.9991, abs=1e-4)
    assert coeffs.c21 == 0 and coeffs.c32 == 0


def test_degenerate_rates_cancel_electric_term():
    system = LevelSystem(gamma1=1.0, gamma2=0.3, gamma3=0.3)
    assert abs(extract_coefficients(system, PUMPED, "incoherent").d32) < 1e-14


def test_selection_rule_zeroes_cross_terms(system):
    drive = DriveConfig(delta2=0.4)
    coeffs = extract_coefficients(system, drive)
    assert coeffs.branch == DETUNED
    assert coeffs.c21 == 0 and coeffs.c32 == 0

    raw = extract_coefficients(system, drive, apply_selection_rule=False)
    assert raw.c21 != 0 and raw.c32 != 0
    assert raw.d21 == coeffs.d21 and raw.d32 == coeffs.d32


def test_resonant_branch_keeps_cross_terms(system):
    coeffs = extract_coefficients(system, DriveConfig().on_sigma(0.5))
    assert coeffs.branch == RESONANT
    assert abs(coeffs.c21) > 0 and abs(coeffs.c32) > 0


def test_cross_terms_vanish_without_control_field(system):
    coeffs = extract_coefficients(system, DriveConfig(omega31_mag=0.0, omega32_mag=0.0))
    assert abs(coeffs.c21) < 1e-15 and abs(coeffs.c32) < 1e-15


def test_resonance_tolerance():
    assert is_resonant(DriveConfig(delta2=1e-10))
    assert not is_resonant(DriveConfig(delta2=1e-8))


def test_coefficients_are_continuous_across_resonance():
    system = LevelSystem(gamma3=0.1)
    at = extract_coefficients(system, DriveConfig(), apply_selection_rule=False)
    near = extract_coefficients(system, DriveConfig(delta2=1e-7), apply_selection_rule=False)
    for key in ("d21", "c21", "d32", "c32"):
        assert getattr(near, key) == pytest.approx(getattr(at, key), rel=1e-5)


@given(st.floats(0.1, 3.0), st.floats(-2.0, 2.0), st.floats(0.0, 2 * math.pi))
def test_harmonics_pair_as_hermitian_conjugates(omega, delta2, phi):
    system = LevelSystem(gamma3=0.1)
    drive = DriveConfig(omega31_mag=omega, omega21_mag=1e-3, phi=phi, delta2=delta2)
    solution = solve_harmonics(build_generator(system, drive))
    plus, minus = solution.amplitude(1), solution.amplitude(-1)
    assert plus == pytest.approx(np.conj(minus[list(TRANSPOSE_INDEX)]), abs=1e-12)


def test_synthesized_trajectory_is_quasi_steady(system):
    drive = DriveConfig(omega32_mag=0.0, omega21_mag=1e-4, delta2=0.7)
    gen = build_generator(system, drive)
    solution = solve_harmonics(gen)
    assert solution.evaluate(np.linspace(0, 10, 5)).shape == (5, 8)
    with pytest.raises(ValueError):
        solution.amplitude(2)


def test_probe_shift_is_linear(system, drive):
    small = static_probe_shift(system, drive, 1e-6)
    half = static_probe_shift(system, drive, 5e-7)
    assert small[RHO32] == pytest.approx(2 * half[RHO32], rel=1e-6)


def test_direct_coefficient_matches_extraction(system):
    drive = DriveConfig(delta1=0.3, delta2=-0.2, delta3=0.1)
    coeffs = extract_coefficients(system, drive)
    assert direct_coefficient(system, drive, "d21") == pytest.approx(coeffs.d21, rel=1e-9)
    assert direct_coefficient(system, drive, "d32") == pytest.approx(coeffs.d32, rel=1e-6)
    with pytest.raises(ValueError):
        direct_coefficient(system, drive, "c21")


def test_strong_probe_fails_linearity_certificate(system, drive):
    settings = ExtractionSettings(epsilon=0.5)
    with pytest.raises(LinearityFailure):
        extract_coefficients(system, drive, settings=settings)


def test_undamped_generator_is_singular():
    system = LevelSystem(gamma1=1.0, gamma2=1.0, gamma3=0.0)
    drive = DriveConfig(omega31_mag=0.0, omega32_mag=0.0, omega21_mag=0.0)
    with pytest.raises(SingularGenerator) as info:
        solve_harmonics(build_generator(system, drive))
    assert info.value.condition > 1e12


def test_electric_coefficient_is_absorptive_on_resonance(system):
    coeffs = extract_coefficients(system, PUMPED, "incoherent")
    assert coeffs.d32.imag > 0


def test_trapped_population_amplifies_magnetic_probe(system, drive):
    rho11, rho22, _ = zeroth_order_populations(system, drive)
    assert rho22 > rho11
    assert extract_coefficients(system, drive).d21.imag < 0


def test_weak_control_keeps_ground_state_ordering(system):
    rho11, rho22, rho33 = zeroth_order_populations(system, DriveConfig(omega31_mag=1e-3))
    assert rho11 > rho22 > rho33


def test_extraction_emits_no_numpy_warnings(system):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        coeffs = extract_coefficients(system, DriveConfig(omega31_mag=1.0, psi=0.7))
    assert coeffs.branch == RESONANT
