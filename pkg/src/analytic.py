"""
Closed-form expansion coefficients and zeroth-order populations.

Notation shared by all forms (Ω = |Ω31|):
    γs = γ1 + γ2 + γ3
    Γ  = (γ1 + γ2)² γ3
    B  = 4Δ1²γ3 + Γ + 4Ω²(γ2 + 2γ3)
    D  = B evaluated at Δ1 = Δ2 + Δ3
    C± = 4Ω² + (±2iΔ3 + γ3)(∓2iΔ2 + γs)

Cross coefficients carry Ω31 (and therefore e^{iψ}); d32 carries Ω² only.
Numerators and denominators are grouped as in the published closed forms.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from floquet_solver import DETUNED, RESONANT, ExpansionCoefficients, is_resonant, zeroth_order_populations
from model import CLOSED_LOOP, INCOHERENT, DriveConfig, InvalidParameters, LevelSystem, LoopResponseError, normalize_mode

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-14


class DegenerateDenominator(LoopResponseError):
    pass


@dataclass(frozen=True)
class AnalyticCoefficients:
    d21: complex
    c21: complex
    d32: complex
    c32: complex
    branch: str
    B: float = float("nan")
    Gamma: float = float("nan")
    gamma_s: float = float("nan")
    C_plus: complex = complex("nan")
    C_minus: complex = complex("nan")
    D: float = float("nan")

    def as_expansion(self) -> ExpansionCoefficients:
        return ExpansionCoefficients(d21=self.d21, c21=self.c21, d32=self.d32, c32=self.c32, branch=self.branch)


@dataclass(frozen=True)
class PopulationForms:
    rho11: float
    rho22: float
    rho33: float
    # Direct coherences rebuilt from the populations (incoherent mode only).
    d21: Optional[complex] = None
    d32: Optional[complex] = None


def _nonzero(value: complex, label: str) -> complex:
    if abs(value) < DENOMINATOR_FLOOR:
        raise DegenerateDenominator(f"{label} = {value!r} is below {DENOMINATOR_FLOOR:g}")
    return value


def general_coherences(system: LevelSystem, drive: DriveConfig) -> AnalyticCoefficients:
    """Closed-loop coefficients for arbitrary Δ. The in-phase selection rule is not applied."""
    g1, g2, g3 = system.gamma1, system.gamma2, system.gamma3
    gs, big_g = system.gamma_s, system.big_gamma
    d1, d2, d3 = drive.delta1, drive.delta2, drive.delta3
    o31 = drive.omega31
    w = drive.omega31_mag**2
    g12 = g1 + g2

    B = _nonzero(4 * d1**2 * g3 + big_g + 4 * w * (g2 + 2 * g3), "B")

    num_d21 = (
        8 * d1**3 * g3
        + 4j * d1**2 * g3 * (2j * d3 + gs)
        + d3 * (8 * w * (g2 - g3) - 2 * big_g)
        + 2 * d1 * (-4 * w * (g2 - 2 * g3) + big_g)
        - 1j * ((4 * w * g2 - big_g) * gs - 4 * w * g3**2)
    )
    den_d21 = _nonzero(4 * w + (2 * d3 - 1j * g3) * (2 * d1 - 2 * d3 + 1j * gs), "d21 denominator")
    d21 = (2 / B) * num_d21 / den_d21

    num_c21 = 4 * w * (g2 - g3) + (2 * d1 + 1j * g12) * g3 * (-2 * d2 - 1j * gs)
    den_c21 = _nonzero(4 * w + (2j * (d1 - d2) + g3) * (-2j * d2 + gs), "c21 denominator")
    c21 = -(4 / B) * o31 * num_c21 / den_c21

    num_c32 = 4 * w * (-g2 + g3) + (2 * d1 + 1j * g12) * g3 * (2 * d1 - 2 * d3 - 1j * gs)
    den_c32 = _nonzero(4 * w + (2 * d3 + 1j * g3) * (2 * d1 - 2 * d3 - 1j * gs), "c32 denominator")
    c32 = (4 / B) * o31 * num_c32 / den_c32

    num_d32 = 2 * (-d1 + d2) * g2 + 1j * g3 * (2j * d2 + g1 + g3)
    den_d32 = _nonzero(4 * w + (-2j * d1 + 2j * d2 + g3) * (2j * d2 + gs), "d32 denominator")
    d32 = -w * (8 / B) * num_d32 / den_d32

    return AnalyticCoefficients(
        d21=complex(d21),
        c21=complex(c21),
        d32=complex(d32),
        c32=complex(c32),
        branch=RESONANT if is_resonant(drive) else DETUNED,
        B=float(B),
        Gamma=big_g,
        gamma_s=gs,
    )


def resonant_coherences(system: LevelSystem, drive: DriveConfig) -> AnalyticCoefficients:
    """Coefficients on multiphoton resonance; drive.delta1 is ignored and replaced by Δ2 + Δ3."""
    g1, g2, g3 = system.gamma1, system.gamma2, system.gamma3
    gs, big_g = system.gamma_s, system.big_gamma
    d2, d3 = drive.delta2, drive.delta3
    o31 = drive.omega31
    w = drive.omega31_mag**2
    g12 = g1 + g2

    c_plus = _nonzero(4 * w + (2j * d3 + g3) * (-2j * d2 + gs), "C+")
    c_minus = _nonzero(4 * w + (-2j * d3 + g3) * (2j * d2 + gs), "C-")
    D = _nonzero(4 * (d2 + d3) ** 2 * g3 + big_g + 4 * w * (g2 + 2 * g3), "D")

    brace_d21 = (
        8j * d2**3 * g3
        + 4 * d2**2 * (4j * d3 - gs) * g3
        - (4 * d3**2 * g3 + big_g) * gs
        + 4 * w * (g2 * g12 + (2j * d3 + g2) * g3 - g3**2)
        + 2j * d2 * (-4 * w * (g2 - 2 * g3) + big_g + 4 * g3 * d3 * (d3 + 1j * gs))
    )
    d21 = -(2j / (c_plus * D)) * brace_d21

    loop = (2 * (d2 + d3) + 1j * g12) * g3
    c21 = -(4 * o31 / (c_plus * D)) * (4 * w * (g2 - g3) - loop * (2 * d2 + 1j * gs))
    c32 = -(4 * o31 / (c_minus * D)) * (4 * w * (g2 - g3) - loop * (2 * d2 - 1j * gs))
    d32 = -(8j / (c_minus * D)) * w * (2j * d3 * g2 + g3 * (2j * d2 + g1 + g3))

    return AnalyticCoefficients(
        d21=complex(d21),
        c21=complex(c21),
        d32=complex(d32),
        c32=complex(c32),
        branch=RESONANT,
        B=float(D),
        Gamma=big_g,
        gamma_s=gs,
        C_plus=complex(c_plus),
        C_minus=complex(c_minus),
        D=float(D),
    )


def _incoherent_constant(system: LevelSystem, r1: float) -> float:
    g1, g2, g3 = system.gamma1, system.gamma2, system.gamma3
    return r1 * g2 + 2 * r1 * g3 + g1 * g3 + g2 * g3


def incoherent_coherences(system: LevelSystem, r1: float, delta2: float, delta3: float) -> AnalyticCoefficients:
    """Direct coefficients of the incoherently pumped ladder. No cross terms exist."""
    if r1 < 0:
        raise InvalidParameters(f"r1 must be >= 0, got {r1}")
    g1, g2, g3 = system.gamma1, system.gamma2, system.gamma3
    gs = system.gamma_s
    c_inc = _nonzero(_incoherent_constant(system, r1), "incoherent population constant")

    d21 = 2j * (r1 * (g3 - g2) + (g1 + g2) * g3) / ((2j * delta3 + r1 + g3) * c_inc)
    d32 = 2j * r1 * (g2 - g3) / ((2j * delta2 + gs + r1) * c_inc)

    return AnalyticCoefficients(
        d21=complex(d21),
        c21=0j,
        d32=complex(d32),
        c32=0j,
        branch=RESONANT if abs(delta2 + delta3) <= 1e-9 else DETUNED,
        Gamma=system.big_gamma,
        gamma_s=gs,
    )


def incoherent_populations(system: LevelSystem, r1: float):
    """(ρ11, ρ22, ρ33) of the pumped ladder without probes."""
    g1, g2, g3 = system.gamma1, system.gamma2, system.gamma3
    c_inc = _nonzero(_incoherent_constant(system, r1), "incoherent population constant")
    return (r1 + g1 + g2) * g3 / c_inc, r1 * g2 / c_inc, r1 * g3 / c_inc


def coherent_populations(system: LevelSystem, drive: DriveConfig):
    """
    (ρ11, ρ22, ρ33) of the closed loop without probes.

    Only the 1-3 transition is driven, so ρ33 = 4Ω²γ3/B, ρ22 = (γ2/γ3)ρ33
    and ρ11 = ρ33(1 + ((γ1+γ2)² + 4Δ1²)/(4Ω²)).
    """
    g2, g3 = system.gamma2, system.gamma3
    w = drive.omega31_mag**2
    B = _nonzero(4 * drive.delta1**2 * g3 + system.big_gamma + 4 * w * (g2 + 2 * g3), "B")
    rho33 = 4 * w * g3 / B
    rho22 = 4 * w * g2 / B
    rho11 = ((system.gamma1 + g2) ** 2 + 4 * drive.delta1**2) * g3 / B + rho33
    return rho11, rho22, rho33


def strong_field_populations(system: LevelSystem):
    """Populations for |Ω31| → ∞ at fixed detunings: ρ11 = ρ33 = 1/(γ2/γ3 + 2), ρ22 = 1/(2γ3/γ2 + 1)."""
    g2, g3 = system.gamma2, system.gamma3
    if g3 == 0:
        return 0.0, 1.0, 0.0
    outer = 1.0 / (g2 / g3 + 2)
    middle = 1.0 / (2 * g3 / g2 + 1) if g2 > 0 else 0.0
    return outer, middle, outer


def incoherent_zero_absorption_pump(system: LevelSystem) -> float:
    """
    Pump rate at which ρ11 = ρ22 and the magnetic direct term vanishes for every Δ3:
    r1 = (γ1 + γ2)γ3 / (γ2 − γ3).
    """
    g1, g2, g3 = system.gamma1, system.gamma2, system.gamma3
    if g2 <= g3:
        raise InvalidParameters(f"no positive zero-absorption pump for gamma2={g2} <= gamma3={g3}")
    return (g1 + g2) * g3 / (g2 - g3)


def population_forms(system: LevelSystem, drive: DriveConfig, mode: str = CLOSED_LOOP) -> PopulationForms:
    mode = normalize_mode(mode)
    if mode == INCOHERENT:
        rho11, rho22, rho33 = incoherent_populations(system, drive.r1)
        r1, gs = drive.r1, system.gamma_s
        d21 = 2 * (rho11 - rho22) / (2 * drive.delta3 - 1j * (r1 + system.gamma3))
        d32 = 2 * (rho22 - rho33) / (2 * drive.delta2 - 1j * (r1 + gs))
        return PopulationForms(rho11, rho22, rho33, complex(d21), complex(d32))

    rho11, rho22, rho33 = zeroth_order_populations(system, drive, mode)
    return PopulationForms(rho11, rho22, rho33)


def closed_form_coefficients(
    system: LevelSystem, drive: DriveConfig, mode: str = CLOSED_LOOP, apply_selection_rule: bool = True
) -> AnalyticCoefficients:
    """Fast evaluation path with the same branch semantics as the Floquet extraction."""
    mode = normalize_mode(mode)
    if mode == INCOHERENT:
        return incoherent_coherences(system, drive.r1, drive.delta2, drive.delta3)
    if is_resonant(drive):
        return resonant_coherences(system, drive)
    coeffs = general_coherences(system, drive)
    if not apply_selection_rule:
        return coeffs
    return AnalyticCoefficients(
        d21=coeffs.d21,
        c21=0j,
        d32=coeffs.d32,
        c32=0j,
        branch=DETUNED,
        B=coeffs.B,
        Gamma=coeffs.Gamma,
        gamma_s=coeffs.gamma_s,
    )


def splitting_estimate(omega31_mag: float, gamma: float = 1.0) -> float:
    """Separation of the magnetic doublet at Δ1 = 0: 2·sqrt(|Ω31|² − γ²/2)."""
    inner = omega31_mag**2 - 0.5 * gamma**2
    return 2.0 * float(np.sqrt(inner)) if inner > 0 else 0.0


def dressed_peak(delta1: float, omega31_mag: float) -> float:
    """Electric-probe peak position (Δ1 + sqrt(Δ1² + 4|Ω31|²))/2 of the dressed upper state."""
    return 0.5 * (delta1 + float(np.sqrt(delta1**2 + 4 * omega31_mag**2)))
