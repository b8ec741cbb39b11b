"""
Parameter sweeps: one row per axis sample, rows evaluated independently
(serially or in a process pool) and written in axis order.
"""

import concurrent.futures
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from analytic import dressed_peak, splitting_estimate
from floquet_solver import DEFAULT_SETTINGS, ExtractionSettings
from model import CLOSED_LOOP, DriveConfig, InvalidParameters, LevelSystem, MediumParams, normalize_mode
from worker import ALL_OUTPUTS, COMPLEX_OUTPUTS, ENGINES, FLOQUET, PointJob, check_tracked_outputs, evaluate_point

logger = logging.getLogger(__name__)

VERSION = "loop-response 0.1.0"

AXES = ("delta2", "delta3", "omega31", "r1", "sigma", "phase_loop")
DEFAULT_RANGES = {
    "delta2": (-4.0, 4.0, 161),
    "delta3": (-4.0, 4.0, 161),
    "sigma": (-4.0, 4.0, 161),
    "omega31": (0.0, 4.0, 41),
    "r1": (0.0, 4.0, 41),
    "phase_loop": (0.0, 2 * math.pi, 65),
}
SUCCESS_FRACTION = 0.9


@dataclass(frozen=True)
class ScanSpec:
    mode: str
    axis: str
    range: Tuple[float, float, int]
    system: LevelSystem = field(default_factory=LevelSystem)
    drive: DriveConfig = field(default_factory=DriveConfig)
    medium: MediumParams = field(default_factory=MediumParams)
    outputs: Tuple[str, ...] = ("d21", "d32")
    settings: ExtractionSettings = DEFAULT_SETTINGS
    engine: str = FLOQUET
    track_extremum: bool = False
    gain: bool = False
    name: str = "scan"

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        if self.axis not in AXES:
            raise InvalidParameters(f"axis must be one of {AXES}, got {self.axis!r}")
        start, stop, count = self.range
        if int(count) != count or count < 2:
            raise InvalidParameters(f"scan count must be an integer >= 2, got {count}")
        if not start < stop:
            raise InvalidParameters(f"scan range needs start < stop, got {start}:{stop}")
        object.__setattr__(self, "range", (float(start), float(stop), int(count)))
        unknown = [o for o in self.outputs if o not in ALL_OUTPUTS]
        if unknown:
            raise InvalidParameters(f"unknown outputs {unknown}; choose from {ALL_OUTPUTS}")
        if self.engine not in ENGINES:
            raise InvalidParameters(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.track_extremum:
            check_tracked_outputs(self.outputs)
        object.__setattr__(self, "outputs", tuple(self.outputs))

    def axis_values(self) -> np.ndarray:
        start, stop, count = self.range
        return np.linspace(start, stop, count)


@dataclass
class ScanRow:
    index: int
    axis_value: float
    values: Dict[str, float]
    status: str = "ok"
    warnings: List[str] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class ScanResult:
    spec: ScanSpec
    columns: List[str]
    rows: List[ScanRow]
    seed: Optional[int] = None

    @property
    def failures(self) -> int:
        return sum(not r.ok for r in self.rows)

    @property
    def success_fraction(self) -> float:
        return (len(self.rows) - self.failures) / len(self.rows) if self.rows else 0.0

    def column(self, name: str) -> np.ndarray:
        if name == self.spec.axis:
            return np.array([r.axis_value for r in self.rows])
        return np.array([r.values.get(name, math.nan) for r in self.rows])

    def table(self) -> List[List[float]]:
        return [[row.axis_value] + [row.values.get(c, math.nan) for c in self.columns[1:]] for row in self.rows]

    def metadata(self) -> List[str]:
        start, stop, count = self.spec.range
        lines = [
            VERSION,
            f"name = {self.spec.name}",
            f"mode = {self.spec.mode}",
            f"axis = {self.spec.axis} range = {start!r}:{stop!r}:{count}",
            f"engine = {self.spec.engine}",
            f"seed = {self.seed}",
            f"system = {asdict(self.spec.system)}",
            f"drive = {asdict(self.spec.drive)}",
            f"medium = {asdict(self.spec.medium)}",
            f"extraction = {asdict(self.spec.settings)}",
            f"default ranges: detunings and sigma [-4, 4], pump strengths [0, 4]",
        ]
        if self.spec.track_extremum:
            lines.append("d21 and d32 evaluated at the detuning maximizing |Im|")
        return lines


def apply_axis(drive: DriveConfig, axis: str, value: float) -> DriveConfig:
    value = float(value)
    if axis == "delta2":
        return drive.with_updates(delta2=value)
    if axis == "delta3":
        return drive.with_updates(delta3=value)
    if axis == "omega31":
        return drive.with_updates(omega31_mag=value)
    if axis == "r1":
        return drive.with_updates(r1=value)
    if axis == "sigma":
        return drive.on_sigma(value)
    if axis == "phase_loop":
        # ψ chosen so that ψ − 2φ + K·r equals the axis value.
        return drive.with_updates(psi=value + 2 * drive.phi - drive.k_mismatch_phase)
    raise InvalidParameters(f"unknown axis {axis!r}")


def output_columns(spec: ScanSpec) -> List[str]:
    columns = [spec.axis]
    for name in ALL_OUTPUTS:
        if name not in spec.outputs:
            continue
        if name in COMPLEX_OUTPUTS:
            columns.extend([f"re_{name}", f"im_{name}"])
        elif name == "populations":
            columns.extend(["rho11", "rho22", "rho33"])
        else:
            columns.append(name)
    if spec.track_extremum:
        columns.extend(["delta3_ext", "delta2_ext"])
    return columns


def build_jobs(spec: ScanSpec) -> List[PointJob]:
    return [
        PointJob(
            index=i,
            axis_value=float(value),
            system=spec.system,
            drive=apply_axis(spec.drive, spec.axis, value),
            medium=spec.medium,
            mode=spec.mode,
            settings=spec.settings,
            engine=spec.engine,
            outputs=spec.outputs,
            track_extremum=spec.track_extremum,
            gain=spec.gain,
        )
        for i, value in enumerate(spec.axis_values())
    ]


def _to_row(res: Dict) -> ScanRow:
    return ScanRow(
        index=res["index"],
        axis_value=res["axis_value"],
        values=res.get("values", {}),
        status=res.get("status", "error"),
        warnings=list(res.get("warnings", [])),
        errors=list(res.get("errors", [])),
    )


def _log_row(row: ScanRow, spec: ScanSpec):
    logger.debug("row %d %s=%g status: %s", row.index, spec.axis, row.axis_value, row.status)
    for w in row.warnings:
        logger.debug("row %d: %s", row.index, w)
    for e in row.errors:
        logger.warning("row %d (%s=%g): %s", row.index, spec.axis, row.axis_value, e)


def run_scan(spec: ScanSpec, parallelism: int = 1, seed: Optional[int] = None) -> ScanResult:
    jobs = build_jobs(spec)
    columns = output_columns(spec)
    by_index: Dict[int, ScanRow] = {}
    workers = max(1, int(parallelism))

    if workers > 1:
        logger.info("Running %d rows with %d workers.", len(jobs), workers)
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(evaluate_point, job): job for job in jobs}
            for fut in concurrent.futures.as_completed(futures):
                job = futures[fut]
                try:
                    res = fut.result()
                except Exception as exc:
                    res = {"index": job.index, "axis_value": job.axis_value, "status": "error", "errors": [str(exc)]}
                row = _to_row(res)
                _log_row(row, spec)
                by_index[row.index] = row
    else:
        for job in jobs:
            row = _to_row(evaluate_point(job))
            _log_row(row, spec)
            by_index[row.index] = row

    rows = [by_index[i] for i in range(len(jobs))]
    result = ScanResult(spec=spec, columns=columns, rows=rows, seed=seed)
    if result.failures:
        logger.warning("%d of %d rows failed; written as NaN", result.failures, len(rows))
    return result


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    detail: str


def _local_maxima(values: np.ndarray) -> List[int]:
    return [i for i in range(1, len(values) - 1) if values[i] >= values[i - 1] and values[i] > values[i + 1]]


def _sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values[np.isfinite(values) & (values != 0)])
    return int(np.count_nonzero(np.diff(signs)))


def check_doublet(result: ScanResult, column: str = "im_d21", tolerance: float = 0.15) -> CheckOutcome:
    """Two strongest local maxima of |Im| split by about 2|Ω31|."""
    x = result.column(result.spec.axis)
    y = np.abs(result.column(column))
    peaks = sorted(_local_maxima(y), key=lambda i: y[i], reverse=True)[:2]
    omega = result.spec.drive.omega31_mag
    if len(peaks) < 2:
        return CheckOutcome("doublet", False, f"found {len(peaks)} peaks in {column}")
    split = abs(x[peaks[0]] - x[peaks[1]])
    target = 2 * omega
    passed = abs(split - target) <= tolerance * target
    return CheckOutcome(
        "doublet",
        passed,
        f"split {split:.4f} vs 2|Omega31| = {target:.4f} (dressed estimate {splitting_estimate(omega):.4f})",
    )


def check_single_peak(result: ScanResult, column: str) -> CheckOutcome:
    y = np.abs(result.column(column))
    peaks = _local_maxima(y)
    return CheckOutcome(f"single peak {column}", len(peaks) == 1, f"{len(peaks)} local maxima")


def check_dressed_peak(result: ScanResult, column: str = "im_d32", near: float = 2.0) -> CheckOutcome:
    """Peak of |Im| closest to `near` sits within 0.5 of it and within 0.05 of the dressed-state position."""
    x = result.column(result.spec.axis)
    y = np.abs(result.column(column))
    peaks = _local_maxima(y)
    if not peaks:
        return CheckOutcome("dressed peak", False, "no local maximum")
    best = min(peaks, key=lambda i: abs(x[i] - near))
    expected = dressed_peak(result.spec.drive.delta1, result.spec.drive.omega31_mag)
    passed = abs(x[best] - near) <= 0.5 and abs(x[best] - expected) <= 0.05
    return CheckOutcome("dressed peak", passed, f"peak at {x[best]:.4f}, dressed prediction {expected:.4f}")


def check_zero_crossing(result: ScanResult, column: str = "im_d21") -> CheckOutcome:
    """Absorption at the start of the sweep, amplification at its end, one sign change."""
    y = result.column(column)
    changes = _sign_changes(y)
    passed = y[0] > 0 and y[-1] < 0 and changes == 1
    return CheckOutcome(f"zero crossing {column}", passed, f"{changes} sign changes, first {y[0]:.4g}, last {y[-1]:.4g}")


def check_absorptive(result: ScanResult, column: str = "im_d32") -> CheckOutcome:
    y = result.column(column)
    passed = bool(np.all(y >= -1e-12))
    return CheckOutcome(f"absorptive {column}", passed, f"min {np.nanmin(y):.4g}")


def check_cross_agreement(result: ScanResult, rtol: float = 1e-3) -> CheckOutcome:
    c21 = np.hypot(result.column("re_c21"), result.column("im_c21"))
    c32 = np.hypot(result.column("re_c32"), result.column("im_c32"))
    gap = float(np.max(np.abs(c21 - c32) / np.maximum(np.maximum(c21, c32), 1e-300)))
    return CheckOutcome("cross agreement", gap <= rtol, f"max relative gap {gap:.3e}")


def check_phase_average(result: ScanResult, column: str = "xi_he", atol: float = 1e-10) -> CheckOutcome:
    """Mean over one full turn of the loop phase vanishes; magnitude stays constant."""
    values = result.column(f"re_{column}") + 1j * result.column(f"im_{column}")
    x = result.column(result.spec.axis)
    if math.isclose(x[-1] - x[0], 2 * math.pi):
        values = values[:-1]
    scale = max(float(np.max(np.abs(values))), 1e-300)
    mean = abs(values.mean())
    spread = float(np.ptp(np.abs(values)))
    passed = mean <= atol * max(scale, 1.0) and spread <= 1e-9 * scale
    return CheckOutcome(f"phase average {column}", passed, f"|mean| {mean:.3e}, magnitude spread {spread:.3e}")


PRESET_CHECKS = {
    "stark_doublet": lambda r: [check_doublet(r, "im_d21")],
    "incoherent_line": lambda r: [check_single_peak(r, "im_d21")],
    "control_crossover": lambda r: [check_zero_crossing(r, "im_d21")],
    "pump_crossover": lambda r: [check_zero_crossing(r, "im_d21"), check_absorptive(r, "im_d32")],
    "dressed_electric": lambda r: [check_dressed_peak(r, "im_d32", near=2.0)],
    "sigma_cross": lambda r: [check_cross_agreement(r)],
    "phase_loop": lambda r: [check_phase_average(r, "xi_he"), check_phase_average(r, "xi_eh")],
}


def shape_checks(result: ScanResult) -> List[CheckOutcome]:
    checks = PRESET_CHECKS.get(result.spec.name)
    return checks(result) if checks else []


def scan_spec_from_preset(
    name: str,
    preset: Dict,
    system: LevelSystem,
    drive: DriveConfig,
    medium: MediumParams,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
    engine: str = FLOQUET,
) -> ScanSpec:
    """Preset overrides are applied on top of the base configuration."""
    axis = preset["axis"]
    start, stop, count = preset.get("range", DEFAULT_RANGES[axis])
    system_over = dict(preset.get("system", {}))
    if system_over.get("gamma3") == "alpha^2":
        system_over["gamma3"] = medium.alpha**2
    return ScanSpec(
        mode=preset.get("mode", CLOSED_LOOP),
        axis=axis,
        range=(float(start), float(stop), int(count)),
        system=LevelSystem(**{**asdict(system), **system_over}),
        drive=drive.with_updates(**preset.get("drive", {})),
        medium=medium,
        outputs=tuple(preset.get("outputs", ("d21", "d32"))),
        settings=settings,
        engine=preset.get("engine", engine),
        track_extremum=bool(preset.get("track_extremum", False)),
        name=name,
    )


def parse_range(text: str) -> Tuple[float, float, int]:
    """'a:b:n' -> (a, b, n)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameters(f"range must look like start:stop:count, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InvalidParameters(f"cannot parse range {text!r}: {exc}") from exc
