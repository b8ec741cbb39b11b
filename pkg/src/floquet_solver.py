"""
First-order Floquet (harmonic balance) solution of the transformed equations of motion
and extraction of the linear-response expansion coefficients.

    R0  = -M0^{-1} Σ0
    R+1 = -(M0 - iΔ)^{-1} (M+ R0 + Σ+)
    R-1 = -(M0 + iΔ)^{-1} (M- R0 + Σ-)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from generator import HarmonicGenerator, build_generator
from model import (
    CLOSED_LOOP,
    RHO21,
    RHO32,
    DensityVector,
    DriveConfig,
    LevelSystem,
    LoopResponseError,
    normalize_mode,
)

logger = logging.getLogger(__name__)

RESONANT = "resonant"
DETUNED = "detuned"


class SingularGenerator(LoopResponseError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class LinearityFailure(LoopResponseError):
    pass


@dataclass(frozen=True)
class ExtractionSettings:
    epsilon: float = 1e-6
    resonance_tol: float = 1e-9
    linearity_tol: float = 1e-6
    condition_bound: float = 1e12
    residual_bound: float = 1e-9


DEFAULT_SETTINGS = ExtractionSettings()


@dataclass(frozen=True, eq=False)
class FloquetSolution:
    r0: DensityVector
    r_plus: np.ndarray  # coefficient of Ω21 e^{iΔt}
    r_minus: np.ndarray  # coefficient of Ω12 e^{-iΔt}
    residual: float
    delta: float
    omega21: complex
    omega12: complex
    condition: float = 0.0

    def amplitude(self, k: int) -> np.ndarray:
        """Harmonic amplitude at frequency kΔ, including the magnetic probe factor."""
        if k == 0:
            return self.r0.entries
        if k == 1:
            return self.r_plus * self.omega21
        if k == -1:
            return self.r_minus * self.omega12
        raise ValueError(f"only harmonics k in (-1, 0, 1) are kept, got {k}")

    def evaluate(self, t) -> np.ndarray:
        """Synthesized quasi-steady trajectory; t scalar or 1-D array -> (8,) or (len(t), 8)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        phase = np.exp(1j * self.delta * t_arr)[:, None]
        values = self.amplitude(0)[None, :] + self.amplitude(1)[None, :] * phase + self.amplitude(-1)[None, :] / phase
        return values[0] if np.ndim(t) == 0 else values


@dataclass(frozen=True)
class ExpansionCoefficients:
    d21: complex  # direct magnetic: ρ̂21 per unit Ω21
    c21: complex  # cross magnetic: ρ̂21 per unit Ω23
    d32: complex  # direct electric: ρ̂32 per unit Ω32
    c32: complex  # cross electric: ρ̂32 per unit Ω12
    branch: str
    delta: float = 0.0
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, complex]:
        return {"d21": self.d21, "c21": self.c21, "d32": self.d32, "c32": self.c32}


def _solve(matrix: np.ndarray, rhs_vec: np.ndarray, settings: ExtractionSettings, label: str) -> Tuple[np.ndarray, float, float]:
    condition = float(np.abs(np.linalg.cond(matrix, 1)))
    if not np.isfinite(condition) or condition > settings.condition_bound:
        raise SingularGenerator(
            f"{label}: condition estimate {condition:.3e} exceeds {settings.condition_bound:.1e}",
            condition,
        )
    x = lu_solve(lu_factor(matrix), rhs_vec)
    scale = np.linalg.norm(rhs_vec)
    residual = float(np.linalg.norm(matrix @ x - rhs_vec) / (scale if scale > 0 else 1.0))
    return x, residual, condition


def solve_harmonics(
    gen: HarmonicGenerator,
    omega21: Optional[complex] = None,
    omega12: Optional[complex] = None,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
) -> FloquetSolution:
    omega21 = gen.omega21 if omega21 is None else complex(omega21)
    omega12 = np.conj(omega21) if omega12 is None else complex(omega12)
    eye = np.eye(8)

    r0, res0, cond0 = _solve(gen.m0, -gen.sigma0, settings, "M0")
    r_plus, res_p, cond_p = _solve(gen.m0 - 1j * gen.delta * eye, -(gen.m_plus @ r0 + gen.sigma_plus), settings, "M0 - iΔ")
    r_minus, res_m, cond_m = _solve(gen.m0 + 1j * gen.delta * eye, -(gen.m_minus @ r0 + gen.sigma_minus), settings, "M0 + iΔ")

    residual = max(res0, res_p, res_m)
    if residual > settings.residual_bound:
        logger.warning("Floquet residual %.3e above %.1e", residual, settings.residual_bound)

    return FloquetSolution(
        r0=DensityVector(r0),
        r_plus=r_plus,
        r_minus=r_minus,
        residual=residual,
        delta=gen.delta,
        omega21=omega21,
        omega12=complex(omega12),
        condition=max(cond0, cond_p, cond_m),
    )


def is_resonant(drive: DriveConfig, settings: ExtractionSettings = DEFAULT_SETTINGS) -> bool:
    return abs(drive.delta) <= settings.resonance_tol


def _certified(value_eps: complex, value_half: complex, label: str, settings: ExtractionSettings) -> complex:
    gap = abs(value_eps - value_half)
    scale = max(abs(value_eps), abs(value_half))
    if gap > settings.linearity_tol * scale + 1e-12:
        raise LinearityFailure(
            f"{label}: extraction at ε and ε/2 differs by {gap:.3e} (scale {scale:.3e})"
        )
    return value_half


def static_probe_shift(
    system: LevelSystem,
    drive: DriveConfig,
    magnitude: float,
    mode: str = CLOSED_LOOP,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """
    R0(|Ω32| = magnitude) − R0(Ω32 = 0), both with Ω21 = 0.

    Solved as M0·δR = −(ΔΣ0 + ΔM0·R0_dark) so the O(|Ω32|) part is not
    formed as a difference of O(1) populations.
    """
    dark = build_generator(system, drive.with_updates(omega32_mag=0.0, omega21_mag=0.0), mode)
    probed = build_generator(system, drive.with_updates(omega32_mag=magnitude, omega21_mag=0.0), mode)
    r_dark, _, _ = _solve(dark.m0, -dark.sigma0, settings, "M0")
    source = -((probed.sigma0 - dark.sigma0) + (probed.m0 - dark.m0) @ r_dark)
    shift, residual, _ = _solve(probed.m0, source, settings, "M0")
    if residual > settings.residual_bound:
        logger.warning("probe-shift residual %.3e above %.1e", residual, settings.residual_bound)
    return shift


def extract_coefficients(
    system: LevelSystem,
    drive: DriveConfig,
    mode: str = CLOSED_LOOP,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
    apply_selection_rule: bool = True,
) -> ExpansionCoefficients:
    """
    Linear-response expansion coefficients at the drive's control field, detunings and phases.
    Probe magnitudes in `drive` are ignored; the electric probe is set to ε and ε/2 internally.
    With apply_selection_rule=False the cross coefficients are returned for any Δ.
    """
    mode = normalize_mode(mode)
    eps = settings.epsilon
    unit_phase = np.exp(1j * drive.phi)

    # Ω21 only scales the ±1 harmonics, so any nonzero value gives the same coefficients.
    bare = drive.with_updates(omega32_mag=0.0, omega21_mag=eps)
    bare_solution = solve_harmonics(build_generator(system, bare, mode), settings=settings)
    d21 = complex(bare_solution.r_plus[RHO21])
    c32_raw = complex(bare_solution.r_minus[RHO32])

    def probed(magnitude: float) -> Tuple[complex, complex]:
        shift = static_probe_shift(system, drive, magnitude, mode, settings)
        omega32 = magnitude * unit_phase
        omega23 = np.conj(omega32)
        return complex(shift[RHO32] / omega32), complex(shift[RHO21] / omega23)

    d32_eps, c21_eps = probed(eps)
    d32_half, c21_half = probed(eps / 2)
    d32 = _certified(d32_eps, d32_half, "d32", settings)
    c21_raw = _certified(c21_eps, c21_half, "c21", settings)

    resonant = is_resonant(drive, settings)
    if apply_selection_rule and not resonant:
        c21, c32 = 0j, 0j
    else:
        c21, c32 = c21_raw, c32_raw

    return ExpansionCoefficients(
        d21=d21,
        c21=c21,
        d32=d32,
        c32=c32,
        branch=RESONANT if resonant else DETUNED,
        delta=drive.delta,
        diagnostics={
            "residual": bare_solution.residual,
            "condition": bare_solution.condition,
        },
    )


def direct_coefficient(
    system: LevelSystem,
    drive: DriveConfig,
    which: str,
    mode: str = CLOSED_LOOP,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
) -> complex:
    """Single-solve d21 or d32 without the linearity certificate, for detuning searches."""
    mode = normalize_mode(mode)
    if which == "d21":
        bare = drive.with_updates(omega32_mag=0.0, omega21_mag=settings.epsilon)
        return complex(solve_harmonics(build_generator(system, bare, mode), settings=settings).r_plus[RHO21])
    if which == "d32":
        shift = static_probe_shift(system, drive, settings.epsilon, mode, settings)
        return complex(shift[RHO32] / (settings.epsilon * np.exp(1j * drive.phi)))
    raise ValueError(f"which must be 'd21' or 'd32', got {which!r}")


def zeroth_order_populations(system: LevelSystem, drive: DriveConfig, mode: str = CLOSED_LOOP) -> Tuple[float, float, float]:
    """(ρ11, ρ22, ρ33) of R0 with both probes switched off."""
    dark = drive.with_updates(omega32_mag=0.0, omega21_mag=0.0)
    return solve_harmonics(build_generator(system, dark, mode)).r0.populations
