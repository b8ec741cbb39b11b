import math

import pytest

from floquet_solver import extract_coefficients, zeroth_order_populations
from model import DriveConfig, InvalidParameters, LevelSystem, MediumParams
from worker import (
    ALL_OUTPUTS,
    PointJob,
    compute_coefficients,
    evaluate_point,
    extremal_direct_terms,
    flatten_outputs,
    run_point,
    track_extremum,
)


def test_tracker_finds_a_lorentzian_peak():
    def line(x):
        return 1j / (1 + 4 * (x - 0.737) ** 2)

    position, value = track_extremum(line, 3.0)
    assert position == pytest.approx(0.737, abs=1e-4)
    assert value.imag == pytest.approx(1.0, rel=1e-6)


def test_tracker_on_a_flat_function():
    assert track_extremum(lambda x: 0j, 2.0) == (0.0, 0j)


def test_tracker_at_the_window_edge():
    position, _ = track_extremum(lambda x: 1j * (x + 3), 2.0)
    assert position == pytest.approx(2.0)


def test_strong_field_direct_terms_change_sign():
    terms, detunings = extremal_direct_terms(LevelSystem(), DriveConfig(omega31_mag=1e3))
    assert terms["d21"].imag < 0
    assert terms["d32"].imag > 0
    assert set(detunings) == {"delta2", "delta3"}


def test_engines_agree_on_resonance(system):
    drive = DriveConfig(omega31_mag=1.5, psi=0.4)
    floquet = compute_coefficients(system, drive)
    closed = compute_coefficients(system, drive, engine="analytic")
    for key in ("d21", "c21", "d32", "c32"):
        assert getattr(closed, key) == pytest.approx(getattr(floquet, key), rel=1e-8)
    with pytest.raises(ValueError):
        compute_coefficients(system, drive, engine="pade")


def test_point_outputs_flatten(system, drive, medium):
    point = run_point(system, drive, medium)
    assert point.coefficients == extract_coefficients(system, drive)
    row = flatten_outputs(point, ALL_OUTPUTS)
    assert {"re_n", "im_n", "enhancement", "rho11", "rho22", "rho33"} <= set(row)
    assert row["rho11"] + row["rho22"] + row["rho33"] == pytest.approx(1.0)


def test_evaluate_point_reports_status(system, medium):
    ok = evaluate_point(PointJob(index=0, axis_value=0.0, system=system, drive=DriveConfig(), medium=medium))
    assert ok["status"] == "ok" and ok["errors"] == []
    assert set(ok["values"]) == {"re_d21", "im_d21", "re_d32", "im_d32"}

    bad = evaluate_point(PointJob(index=1, axis_value=1.0, system=system, drive=DriveConfig(r1=1.0), medium=medium))
    assert bad["status"] == "invalid"
    assert bad["values"] == {}


def test_evaluate_point_catches_solver_failures(medium):
    undamped = LevelSystem(gamma1=1.0, gamma2=1.0, gamma3=0.0)
    job = PointJob(
        index=2,
        axis_value=0.0,
        system=undamped,
        drive=DriveConfig(omega31_mag=0.0),
        medium=medium,
    )
    result = evaluate_point(job)
    assert result["status"] == "solver_failed"
    assert "SingularGenerator" in result["errors"][0]


def test_tracked_point_records_detunings(medium):
    system = LevelSystem(gamma3=0.1)
    job = PointJob(
        index=0, axis_value=1.0, system=system, drive=DriveConfig(), medium=medium, track_extremum=True
    )
    values = evaluate_point(job)["values"]
    assert math.isfinite(values["delta3_ext"]) and math.isfinite(values["delta2_ext"])
    assert abs(values["delta3_ext"]) <= 1.0 + 4.0


@pytest.mark.parametrize("outputs", [("d21", "chi_m"), ("d32", "xi_he"), ("c21",), ("enhancement",)])
def test_tracking_rejects_outputs_from_the_base_point(medium, outputs):
    with pytest.raises(InvalidParameters, match="extremum tracking"):
        PointJob(
            index=0,
            axis_value=1.0,
            system=LevelSystem(),
            drive=DriveConfig(),
            medium=medium,
            outputs=outputs,
            track_extremum=True,
        )


def test_tracked_populations_match_the_base_point(medium):
    drive = DriveConfig(omega31_mag=1.0)
    job = PointJob(
        index=0,
        axis_value=1.0,
        system=LevelSystem(gamma3=0.1),
        drive=drive,
        medium=medium,
        outputs=("d21", "populations"),
        track_extremum=True,
    )
    values = evaluate_point(job)["values"]
    shifted = drive.with_updates(delta3=values["delta3_ext"], delta2=values["delta2_ext"])
    expected = zeroth_order_populations(LevelSystem(gamma3=0.1), shifted)
    assert (values["rho11"], values["rho22"], values["rho33"]) == pytest.approx(expected, abs=1e-14)
