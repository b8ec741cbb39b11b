import math

import numpy as np
import pytest

from analytic import incoherent_populations
from floquet_solver import solve_harmonics
from generator import build_generator
from io_utils import read_csv
from model import INCOHERENT, RHO21, RHO22, RHO32, DensityVector, DriveConfig, LevelSystem
from timedomain_oracle import (
    StepFailure,
    WindowTooShort,
    dump_trajectory_csv,
    estimate_transient_time,
    integrate,
    project_callable,
    project_harmonics,
    projection_window,
)
from verify import (
    check_alpha_squared_integration,
    check_cross_harmonics,
    check_incoherent_endpoint,
    project_time_domain,
    time_domain_gap,
)

DARK = DriveConfig(omega31_mag=0.0, omega32_mag=0.0, omega21_mag=0.0)


def test_middle_level_decays_at_gamma3():
    system = LevelSystem(gamma1=1.0, gamma2=1.0, gamma3=0.1)
    gen = build_generator(system, DARK)
    result = integrate(gen, DensityVector.from_populations(0.0, 1.0), 10.0, transient_time=1.0)
    assert result.endpoint[RHO22].real == pytest.approx(math.exp(-1.0), rel=1e-8)
    assert result.trace_deviation() < 1e-12
    assert result.hermiticity_deviation() < 1e-12


def test_transient_estimate_uses_slowest_rate():
    system = LevelSystem(gamma1=1.0, gamma2=1.0, gamma3=0.1)
    gen = build_generator(system, DARK)
    assert estimate_transient_time(gen) == pytest.approx(10.0 / 0.05)


def test_undamped_system_has_no_transient_bound():
    gen = build_generator(LevelSystem(gamma1=0.0, gamma2=0.0, gamma3=0.0), DARK)
    with pytest.raises(StepFailure):
        estimate_transient_time(gen)


def test_non_positive_end_time(system):
    with pytest.raises(ValueError):
        integrate(build_generator(system, DARK), DensityVector.ground(), 0.0)


def test_projection_recovers_synthesized_harmonics():
    system = LevelSystem(gamma3=0.1)
    drive = DriveConfig(omega21_mag=1e-3, phi=0.4, delta2=0.6)
    solution = solve_harmonics(build_generator(system, drive))
    period = 2 * math.pi / 0.6
    projected = project_callable(lambda t: solution.evaluate(t), (3.0, 3.0 + 4 * period), 0.6)
    assert projected.r0 == pytest.approx(solution.amplitude(0), abs=1e-13)
    assert projected.r_plus == pytest.approx(solution.amplitude(1), abs=1e-13)
    assert projected.r_minus == pytest.approx(solution.amplitude(-1), abs=1e-13)


def test_window_needs_two_beat_periods():
    system = LevelSystem(gamma3=0.1)
    gen = build_generator(system, DriveConfig(omega21_mag=1e-4, delta2=0.5))
    result = integrate(gen, DensityVector.ground(), 20.0, tol=1e-6, transient_time=10.0)
    with pytest.raises(WindowTooShort):
        projection_window(result, gen.delta)
    with pytest.raises(WindowTooShort):
        project_harmonics(result, gen.delta)


def test_resonant_projection_is_the_endpoint():
    system = LevelSystem(gamma3=0.1)
    drive = DriveConfig(omega32_mag=1e-4, omega21_mag=1e-4).on_sigma(0.3)
    gen = build_generator(system, drive)
    result = integrate(gen, DensityVector.ground(), estimate_transient_time(gen, factor=25.0), tol=1e-10)
    projected = project_harmonics(result, 0.0)
    assert np.all(projected.r_plus == 0) and np.all(projected.r_minus == 0)
    # Both probe harmonics are static at Δ = 0 and add to the fixed point.
    static = solve_harmonics(gen).evaluate(0.0)
    assert projected.r0 == pytest.approx(static, abs=1e-6)
    # Cross coherence from the static fields.
    assert abs(projected.r0[RHO21]) > 0


def test_integration_matches_floquet_harmonics():
    system = LevelSystem(gamma3=0.1)
    drive = DriveConfig(omega31_mag=1.0, omega32_mag=1e-4, omega21_mag=1e-4, delta1=-0.5, psi=0.3, phi=1.1)
    assert time_domain_gap(system, drive) <= 1e-5


def test_trajectory_dump(tmp_path, system):
    gen = build_generator(system, DARK)
    result = integrate(gen, DensityVector.from_populations(0.5, 0.5), 1.0, tol=1e-6, transient_time=0.5)
    path = dump_trajectory_csv(result, str(tmp_path / "traj.csv"))
    _, columns, rows = read_csv(path)
    assert columns[0] == "t" and len(columns) == 17
    assert len(rows) == len(result.times)
    assert rows[-1][0] == pytest.approx(1.0)


@pytest.mark.slow
def test_alpha_squared_integration():
    outcome = check_alpha_squared_integration()
    assert outcome.passed, outcome.detail


@pytest.fixture(scope="module")
def detuned_loop():
    return LevelSystem(gamma3=0.1), DriveConfig(omega31_mag=1.0, delta2=0.5)


def test_electric_field_alone_keeps_rho21_static(detuned_loop):
    system, drive = detuned_loop
    projected = project_time_domain(system, drive.with_updates(omega32_mag=1e-4, omega21_mag=0.0))
    assert abs(projected.r0[RHO21]) > 1e-6
    assert abs(projected.r_plus[RHO21]) <= 1e-6 * abs(projected.r0[RHO21])


def test_magnetic_field_alone_puts_rho32_at_minus_one(detuned_loop):
    system, drive = detuned_loop
    projected = project_time_domain(system, drive.with_updates(omega32_mag=0.0, omega21_mag=1e-4))
    assert abs(projected.r_minus[RHO32]) > 1e-6
    assert abs(projected.r0[RHO32]) <= 1e-6 * abs(projected.r_minus[RHO32])


def test_oscillating_harmonics_are_linear_in_omega21(detuned_loop):
    system, drive = detuned_loop
    single = project_time_domain(system, drive.with_updates(omega32_mag=0.0, omega21_mag=1e-4))
    double = project_time_domain(system, drive.with_updates(omega32_mag=0.0, omega21_mag=2e-4))
    assert double.r_plus == pytest.approx(2 * single.r_plus, rel=1e-4, abs=1e-12)
    assert double.r_minus == pytest.approx(2 * single.r_minus, rel=1e-4, abs=1e-12)


def test_projection_reports_its_window(detuned_loop):
    system, drive = detuned_loop
    projected = project_time_domain(system, drive.with_updates(omega21_mag=1e-4))
    t0, t1 = projected.window
    assert t1 - t0 == pytest.approx(4 * 2 * math.pi / 0.5)


def test_pumped_ladder_relaxes_to_the_closed_form_populations():
    system = LevelSystem(gamma3=0.1)
    drive = DriveConfig(omega31_mag=0.0, omega32_mag=0.0, omega21_mag=0.0, r1=1.0)
    gen = build_generator(system, drive, INCOHERENT)
    result = integrate(gen, DensityVector.ground(), estimate_transient_time(gen, factor=25.0))
    assert result.endpoint.populations == pytest.approx(incoherent_populations(system, 1.0), rel=1e-8)


def test_time_domain_property_checks():
    assert check_cross_harmonics().passed
    assert check_incoherent_endpoint().passed
