import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from generator import (
    ModeMismatch,
    build_generator,
    eom_rhs,
    population_derivatives,
    relaxation_rates,
    rhs,
)
from model import RHO11, RHO12, RHO22, DensityVector, DriveConfig, LevelSystem

rate = st.floats(0.01, 5.0)
detuning = st.floats(-5.0, 5.0)
rabi = st.floats(0.0, 3.0)
angle = st.floats(-np.pi, np.pi)


def random_state(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.normal(size=8) + 1j * rng.normal(size=8)


@st.composite
def closed_loop_point(draw):
    system = LevelSystem(gamma1=draw(rate), gamma2=draw(rate), gamma3=draw(rate))
    drive = DriveConfig(
        omega31_mag=draw(rabi),
        psi=draw(angle),
        omega32_mag=draw(rabi),
        omega21_mag=draw(rabi),
        phi=draw(angle),
        delta1=draw(detuning),
        delta2=draw(detuning),
        delta3=draw(detuning),
    )
    return system, drive


@given(closed_loop_point(), st.floats(0.0, 20.0), st.integers(0, 2**16))
def test_blocks_reproduce_equations_of_motion(point, t, seed):
    system, drive = point
    state = random_state(seed)
    gen = build_generator(system, drive)
    assert rhs(t, state, gen) == pytest.approx(eom_rhs(t, state, system, drive), abs=1e-10)


@given(rate, st.floats(0.0, 5.0), detuning, detuning, st.floats(0.0, 10.0), st.integers(0, 2**16))
def test_incoherent_blocks_reproduce_equations_of_motion(g3, r1, d2, d3, t, seed):
    system = LevelSystem(gamma1=1.0, gamma2=1.0, gamma3=g3)
    drive = DriveConfig(omega31_mag=0.0, omega32_mag=0.3, omega21_mag=0.2, delta2=d2, delta3=d3, r1=r1)
    state = random_state(seed)
    gen = build_generator(system, drive, "incoherent")
    assert rhs(t, state, gen) == pytest.approx(eom_rhs(t, state, system, drive, "incoherent"), abs=1e-10)


@given(closed_loop_point(), st.floats(0.0, 20.0), st.integers(0, 2**16))
def test_trace_is_conserved(point, t, seed):
    system, drive = point
    rng = np.random.default_rng(seed)
    rho = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = rho @ rho.conj().T
    rho /= np.trace(rho).real
    d11, d22, d33 = population_derivatives(t, DensityVector.from_matrix(rho), system, drive)
    assert abs(d11 + d22 + d33) < 1e-10


def test_ground_state_is_stationary_without_fields():
    drive = DriveConfig(omega31_mag=0.0, omega32_mag=0.0, omega21_mag=0.0)
    gen = build_generator(LevelSystem(), drive)
    assert np.abs(rhs(0.0, DensityVector.ground(), gen)).max() == 0.0


def test_resonant_generator_is_time_independent(system):
    drive = DriveConfig(omega32_mag=0.01, omega21_mag=0.01, phi=0.3).on_sigma(0.8)
    gen = build_generator(system, drive)
    assert gen.delta == 0.0
    assert gen.matrix(0.0) == pytest.approx(gen.matrix(17.3))


def test_detuned_generator_oscillates_at_delta(system):
    drive = DriveConfig(omega21_mag=0.01, delta2=0.5)
    gen = build_generator(system, drive)
    period = 2 * np.pi / gen.delta
    assert gen.matrix(0.3) == pytest.approx(gen.matrix(0.3 + period))
    assert not np.allclose(gen.matrix(0.3), gen.matrix(0.3 + period / 2))


def test_probe_blocks_pair_up(system, drive):
    gen = build_generator(system, drive)
    assert gen.m_plus[RHO11, RHO12] == -1j
    assert gen.omega12 == pytest.approx(np.conj(gen.omega21))
    assert not gen.m0.flags.writeable


def test_incoherent_pump_enters_ground_row():
    system = LevelSystem(gamma1=1.0, gamma2=1.0, gamma3=0.2)
    gen = build_generator(system, DriveConfig(omega31_mag=0.0, r1=0.5), "incoherent")
    assert gen.m0[RHO11, RHO11] == pytest.approx(-(2 * 0.5 + 1.0))
    assert gen.m0[RHO11, RHO22] == pytest.approx(0.2 - 1.5)
    assert gen.sigma0[RHO11] == pytest.approx(1.5)


@pytest.mark.parametrize(
    "mode, drive",
    [
        ("closed_loop", DriveConfig(r1=0.1)),
        ("incoherent", DriveConfig(omega31_mag=1.0, r1=0.1)),
    ],
)
def test_mode_mismatch(system, mode, drive):
    with pytest.raises(ModeMismatch):
        build_generator(system, drive, mode)


def test_incoherent_mode_drops_pump_detuning(system, caplog):
    drive = DriveConfig(omega31_mag=0.0, r1=1.0, delta1=0.7, delta2=0.2)
    gen = build_generator(system, drive, "incoherent")
    assert gen.delta == pytest.approx(0.2)
    assert "overridden" in caplog.text


def test_free_relaxation_rates():
    system = LevelSystem(gamma1=1.0, gamma2=0.5, gamma3=0.1)
    gen = build_generator(system, DriveConfig(omega31_mag=0.0, omega32_mag=0.0, omega21_mag=0.0))
    rates = relaxation_rates(gen)
    expected = sorted([0.05, 0.05, 0.1, 0.75, 0.75, 0.8, 0.8, 1.5])
    assert rates == pytest.approx(expected)
