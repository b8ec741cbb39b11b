"""
Worker entry for per-point evaluation.
Responsible for: build generator -> extract coefficients -> assemble response -> flatten outputs.
Jobs are frozen dataclasses so they pickle cleanly into a process pool.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from analytic import closed_form_coefficients
from floquet_solver import (
    DEFAULT_SETTINGS,
    ExpansionCoefficients,
    ExtractionSettings,
    direct_coefficient,
    extract_coefficients,
    zeroth_order_populations,
)
from model import (
    CLOSED_LOOP,
    DriveConfig,
    InvalidParameters,
    LevelSystem,
    LoopResponseError,
    MediumParams,
    normalize_mode,
    validate,
)
from response import ResponseSet, assemble

logger = logging.getLogger(__name__)

FLOQUET = "floquet"
ANALYTIC = "analytic"
ENGINES = (FLOQUET, ANALYTIC)

COMPLEX_OUTPUTS = ("d21", "d32", "c21", "c32", "chi_e", "chi_m", "xi_he", "xi_eh", "n")
ALL_OUTPUTS = COMPLEX_OUTPUTS + ("enhancement", "populations")
# Zeroth-order populations do not depend on the probe detunings, so they stay valid when tracking.
TRACKED_OUTPUTS = ("d21", "d32", "populations")

EXTREMUM_MARGIN = 4.0
EXTREMUM_GRID = 101
EXTREMUM_TOL = 1e-6


def check_tracked_outputs(outputs: Tuple[str, ...]):
    """d21 and d32 are tracked at different detunings, so no derived quantity belongs to a single point."""
    mixed = [o for o in outputs if o not in TRACKED_OUTPUTS]
    if mixed:
        raise InvalidParameters(f"extremum tracking only supports outputs {TRACKED_OUTPUTS}, got {mixed}")


@dataclass(frozen=True)
class PointResult:
    coefficients: ExpansionCoefficients
    response: ResponseSet
    populations: Tuple[float, float, float]
    extremal_detunings: Optional[Dict[str, float]] = None

    def value(self, name: str):
        if name in ("d21", "d32", "c21", "c32"):
            return getattr(self.coefficients, name)
        if name == "populations":
            return self.populations
        return getattr(self.response, name)


@dataclass(frozen=True)
class PointJob:
    index: int
    axis_value: float
    system: LevelSystem
    drive: DriveConfig
    medium: MediumParams
    mode: str = CLOSED_LOOP
    settings: ExtractionSettings = DEFAULT_SETTINGS
    engine: str = FLOQUET
    outputs: Tuple[str, ...] = ("d21", "d32")
    track_extremum: bool = False
    gain: bool = False

    def __post_init__(self):
        if self.track_extremum:
            check_tracked_outputs(self.outputs)


def compute_coefficients(
    system: LevelSystem,
    drive: DriveConfig,
    mode: str = CLOSED_LOOP,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
    engine: str = FLOQUET,
) -> ExpansionCoefficients:
    if engine == ANALYTIC:
        return closed_form_coefficients(system, drive, mode).as_expansion()
    if engine != FLOQUET:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    return extract_coefficients(system, drive, mode, settings=settings)


def run_point(
    system: LevelSystem,
    drive: DriveConfig,
    medium: MediumParams,
    mode: str = CLOSED_LOOP,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
    engine: str = FLOQUET,
    gain: bool = False,
) -> PointResult:
    """Full evaluation at one parameter point."""
    mode = normalize_mode(mode)
    coeffs = compute_coefficients(system, drive, mode, settings, engine)
    response = assemble(coeffs, medium, drive, gain=gain)
    populations = zeroth_order_populations(system, drive, mode)
    return PointResult(coefficients=coeffs, response=response, populations=populations)


def track_extremum(func: Callable[[float], complex], half_width: float) -> Tuple[float, complex]:
    """
    Detuning in [−half_width, half_width] where |Im func| is largest: coarse grid,
    then golden-section refinement inside the bracket around the best grid point.
    """
    grid = np.linspace(-half_width, half_width, EXTREMUM_GRID)
    values = [func(x) for x in grid]
    magnitudes = np.array([abs(v.imag) for v in values])
    best = int(np.argmax(magnitudes))
    if magnitudes[best] == 0.0:
        return 0.0, func(0.0)
    if best in (0, len(grid) - 1):
        return float(grid[best]), values[best]

    def objective(x: float) -> float:
        return -abs(func(x).imag)

    try:
        found = minimize_scalar(
            objective,
            bracket=(grid[best - 1], grid[best], grid[best + 1]),
            method="golden",
            tol=EXTREMUM_TOL,
        )
    except ValueError:
        return float(grid[best]), values[best]
    if -found.fun < magnitudes[best]:
        return float(grid[best]), values[best]
    return float(found.x), func(float(found.x))


def extremal_direct_terms(
    system: LevelSystem,
    drive: DriveConfig,
    mode: str = CLOSED_LOOP,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
) -> Tuple[Dict[str, complex], Dict[str, float]]:
    """d21 at its extremal Δ3 and d32 at its extremal Δ2, other detunings held."""
    half_width = drive.omega31_mag + EXTREMUM_MARGIN

    delta3, d21 = track_extremum(
        lambda x: direct_coefficient(system, drive.with_updates(delta3=float(x)), "d21", mode, settings),
        half_width,
    )
    delta2, d32 = track_extremum(
        lambda x: direct_coefficient(system, drive.with_updates(delta2=float(x)), "d32", mode, settings),
        half_width,
    )
    return {"d21": d21, "d32": d32}, {"delta3": delta3, "delta2": delta2}


def flatten_outputs(result: PointResult, outputs: Tuple[str, ...]) -> Dict[str, float]:
    row: Dict[str, float] = {}
    for name in outputs:
        value = result.value(name)
        if name == "populations":
            row["rho11"], row["rho22"], row["rho33"] = (float(p) for p in value)
        elif name == "enhancement":
            row["enhancement"] = float(value)
        else:
            row[f"re_{name}"] = float(np.real(value))
            row[f"im_{name}"] = float(np.imag(value))
    if result.extremal_detunings:
        row["delta3_ext"] = result.extremal_detunings["delta3"]
        row["delta2_ext"] = result.extremal_detunings["delta2"]
    return row


def evaluate_point(job: PointJob) -> Dict:
    """
    Evaluate a single scan row. Returns a dict with status, warnings, errors and values.
    """
    result = {
        "index": job.index,
        "axis_value": job.axis_value,
        "status": "pending",
        "warnings": [],
        "errors": [],
        "values": {},
    }

    report = validate(job.system, job.drive, job.medium, job.mode)
    result["warnings"].extend(report.warnings)
    if not report.ok:
        result["status"] = "invalid"
        result["errors"].extend(report.violations)
        return result

    try:
        point = run_point(job.system, job.drive, job.medium, job.mode, job.settings, job.engine, job.gain)
        if job.track_extremum:
            terms, detunings = extremal_direct_terms(job.system, job.drive, job.mode, job.settings)
            coeffs = point.coefficients
            point = PointResult(
                coefficients=ExpansionCoefficients(
                    d21=terms["d21"],
                    c21=coeffs.c21,
                    d32=terms["d32"],
                    c32=coeffs.c32,
                    branch=coeffs.branch,
                    delta=coeffs.delta,
                ),
                response=point.response,
                populations=point.populations,
                extremal_detunings=detunings,
            )
    except LoopResponseError as exc:
        result["status"] = "solver_failed"
        result["errors"].append(f"{type(exc).__name__}: {exc}")
        return result

    result["values"] = flatten_outputs(point, job.outputs)
    if any(isinstance(v, float) and math.isnan(v) for v in result["values"].values()):
        result["warnings"].append("non-finite output")
    result["status"] = "ok"
    return result
