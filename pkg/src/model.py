"""
Domain types shared by every stage of the simulator.

Units: ħ = 1 and every rate, detuning and Rabi frequency is measured in units
of γ (the |3> -> |1> decay rate of the default preset), so time is measured
in 1/γ. All types are frozen value objects.
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

ALPHA = 1.0 / 137.035999

CLOSED_LOOP = "closed_loop"
INCOHERENT = "incoherent"
MODES = (CLOSED_LOOP, INCOHERENT)

# Component order of the density vector R = (ρ11, ρ12, ρ13, ρ21, ρ22, ρ23, ρ31, ρ32).
RHO11, RHO12, RHO13, RHO21, RHO22, RHO23, RHO31, RHO32 = range(8)
COMPONENT_LABELS = ("rho11", "rho12", "rho13", "rho21", "rho22", "rho23", "rho31", "rho32")
# Index of the transposed element (ij -> ji) for every component.
TRANSPOSE_INDEX = (RHO11, RHO21, RHO31, RHO12, RHO22, RHO32, RHO13, RHO23)

LINEAR_REGIME_FRACTION = 0.1


class LoopResponseError(Exception):
    """Base class for every error raised by the simulator."""


class InvalidParameters(LoopResponseError):
    pass


def normalize_mode(mode: str) -> str:
    value = str(mode).strip().lower().replace("-", "_")
    if value not in MODES:
        raise InvalidParameters(f"mode must be one of {MODES}, got {mode!r}")
    return value


@dataclass(frozen=True)
class LevelSystem:
    gamma1: float = 1.0  # |3> -> |1>
    gamma2: float = 1.0  # |3> -> |2>
    gamma3: float = ALPHA**2  # |2> -> |1>

    @classmethod
    def preset(cls, alpha: float = ALPHA) -> "LevelSystem":
        return cls(gamma1=1.0, gamma2=1.0, gamma3=alpha**2)

    @property
    def gamma_s(self) -> float:
        return self.gamma1 + self.gamma2 + self.gamma3

    @property
    def big_gamma(self) -> float:
        return (self.gamma1 + self.gamma2) ** 2 * self.gamma3


@dataclass(frozen=True)
class DriveConfig:
    omega31_mag: float = 1.0
    psi: float = 0.0
    omega32_mag: float = 1e-6
    omega21_mag: float = 1e-6
    phi: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    delta3: float = 0.0
    r1: float = 0.0
    k_mismatch_phase: float = 0.0

    @property
    def delta(self) -> float:
        """Multiphoton detuning Δ = Δ2 + Δ3 - Δ1."""
        return self.delta2 + self.delta3 - self.delta1

    @property
    def omega31(self) -> complex:
        return self.omega31_mag * np.exp(1j * self.psi)

    @property
    def omega32(self) -> complex:
        return self.omega32_mag * np.exp(1j * self.phi)

    @property
    def omega21(self) -> complex:
        return self.omega21_mag * np.exp(1j * self.phi)

    @property
    def loop_phase(self) -> float:
        return self.psi - 2.0 * self.phi + self.k_mismatch_phase

    def with_updates(self, **changes) -> "DriveConfig":
        return replace(self, **changes)

    def on_sigma(self, sigma: float) -> "DriveConfig":
        """Shift |2> by sigma at fixed probe frequency: Δ2 = -σ, Δ3 = +σ, Δ1 = 0 (Δ stays 0)."""
        return replace(self, delta1=0.0, delta2=-sigma, delta3=sigma)


@dataclass(frozen=True)
class MediumParams:
    density_N: float = 1.0
    d32: float = 1.0
    mu21: Optional[float] = None  # defaults to alpha (e·a0·α·c with c = 1)
    Phi: float = 0.0
    alpha: float = ALPHA
    c_light: float = 1.0
    e_probe: float = 1.0

    def __post_init__(self):
        if self.mu21 is None:
            object.__setattr__(self, "mu21", self.alpha)

    @property
    def b_probe(self) -> float:
        return self.e_probe / self.c_light

    @property
    def mu0(self) -> float:
        # ε0 = 1 in the natural-unit convention.
        return 1.0 / self.c_light**2


@dataclass(frozen=True, eq=False)
class DensityVector:
    entries: np.ndarray = field(default_factory=lambda: np.zeros(8, dtype=complex))

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex).reshape(8)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def ground(cls) -> "DensityVector":
        entries = np.zeros(8, dtype=complex)
        entries[RHO11] = 1.0
        return cls(entries)

    @classmethod
    def from_populations(cls, rho11: float, rho22: float) -> "DensityVector":
        entries = np.zeros(8, dtype=complex)
        entries[RHO11] = rho11
        entries[RHO22] = rho22
        return cls(entries)

    @classmethod
    def from_matrix(cls, rho: np.ndarray) -> "DensityVector":
        rho = np.asarray(rho, dtype=complex)
        return cls(
            np.array(
                [rho[0, 0], rho[0, 1], rho[0, 2], rho[1, 0], rho[1, 1], rho[1, 2], rho[2, 0], rho[2, 1]],
                dtype=complex,
            )
        )

    def __getitem__(self, index: int) -> complex:
        return self.entries[index]

    @property
    def rho33(self) -> complex:
        return 1.0 - self.entries[RHO11] - self.entries[RHO22]

    @property
    def populations(self) -> Tuple[float, float, float]:
        return (
            float(self.entries[RHO11].real),
            float(self.entries[RHO22].real),
            float(self.rho33.real),
        )

    def as_matrix(self) -> np.ndarray:
        e = self.entries
        return np.array(
            [
                [e[RHO11], e[RHO12], e[RHO13]],
                [e[RHO21], e[RHO22], e[RHO23]],
                [e[RHO31], e[RHO32], self.rho33],
            ],
            dtype=complex,
        )

    def hermiticity_error(self) -> float:
        e = self.entries
        pairs = np.abs(e - np.conj(e[list(TRANSPOSE_INDEX)]))
        return float(pairs.max())

    def trace_error(self) -> float:
        # ρ33 is reconstructed, so only the imaginary drift of the populations can break the trace.
        return float(abs(self.entries[RHO11].imag) + abs(self.entries[RHO22].imag))

    def is_physical(self, tol: float = 1e-10) -> bool:
        if self.hermiticity_error() > tol:
            return False
        return all(-tol <= p <= 1.0 + tol for p in self.populations)


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> List[str]:
        return [f"violation: {v}" for v in self.violations] + [f"warning: {w}" for w in self.warnings]


def _check_rate(name: str, value: float, report: ValidationReport):
    if not math.isfinite(value):
        report.violations.append(f"non-finite rate {name}={value}")
    elif value < 0:
        report.violations.append(f"negative rate {name}={value}")


def validate(
    system: LevelSystem,
    drive: DriveConfig,
    medium: MediumParams,
    mode: Optional[str] = None,
) -> ValidationReport:
    """Collect invariant violations and warnings. Never raises."""
    report = ValidationReport()

    for name in ("gamma1", "gamma2", "gamma3"):
        _check_rate(name, getattr(system, name), report)
    if system.gamma1 + system.gamma2 <= 0:
        report.violations.append("upper state does not decay: gamma1 + gamma2 must be > 0")

    _check_rate("r1", drive.r1, report)
    for name in ("omega31_mag", "omega32_mag", "omega21_mag"):
        value = getattr(drive, name)
        if not math.isfinite(value) or value < 0:
            report.violations.append(f"Rabi amplitude {name} must be finite and >= 0, got {value}")
    for name in ("psi", "phi", "delta1", "delta2", "delta3", "k_mismatch_phase"):
        if not math.isfinite(getattr(drive, name)):
            report.violations.append(f"{name} must be finite")

    scales = [system.gamma1 + system.gamma2]
    if drive.omega31_mag > 0:
        scales.append(drive.omega31_mag)
    threshold = LINEAR_REGIME_FRACTION * min(scales)
    for name in ("omega32_mag", "omega21_mag"):
        value = getattr(drive, name)
        if math.isfinite(value) and value > threshold:
            report.warnings.append(
                f"probe beyond linear regime: {name}={value:g} exceeds {threshold:g}"
            )

    if medium.d32 <= 0:
        report.violations.append(f"d32 must be > 0, got {medium.d32}")
    if medium.mu21 is None or medium.mu21 <= 0:
        report.violations.append(f"mu21 must be > 0, got {medium.mu21}")
    if medium.density_N < 0:
        report.violations.append(f"density_N must be >= 0, got {medium.density_N}")
    if medium.alpha <= 0:
        report.violations.append(f"alpha must be > 0, got {medium.alpha}")
    if medium.c_light <= 0:
        report.violations.append(f"c_light must be > 0, got {medium.c_light}")

    if mode is not None:
        try:
            mode = normalize_mode(mode)
        except InvalidParameters as exc:
            report.violations.append(str(exc))
            return report
        if mode == CLOSED_LOOP and drive.r1 != 0:
            report.violations.append("closed_loop mode requires r1 = 0")
        if mode == INCOHERENT:
            if drive.omega31_mag != 0:
                report.violations.append("incoherent mode requires omega31_mag = 0")
            if drive.delta1 != 0:
                report.warnings.append("incoherent mode ignores delta1 (set to 0)")

    return report
