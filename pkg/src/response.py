"""
Macroscopic response assembled from the expansion coefficients.

Natural units: ħ = ε0 = c = 1, μ0 = 1/c², E_p = 1 and B_p = E_p/c. With
μ21 = α·d32 the single power of α of the magnetic dipole is carried by mu21.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from floquet_solver import DEFAULT_SETTINGS, DETUNED, ExpansionCoefficients, ExtractionSettings, extract_coefficients
from model import CLOSED_LOOP, DriveConfig, LevelSystem, MediumParams, normalize_mode

logger = logging.getLogger(__name__)

UNIT_CONVENTION = "natural: hbar = eps0 = 1, mu0 = 1/c^2, E_p = 1, B_p = E_p/c"
PASSIVE = "passive"
GAIN = "gain"


@dataclass(frozen=True)
class ResponseSet:
    chi_e: complex
    chi_m: complex
    xi_he: complex
    xi_eh: complex
    n: complex
    m1: complex
    m2: complex
    enhancement: float
    metadata: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, complex]:
        return {
            "chi_e": self.chi_e,
            "chi_m": self.chi_m,
            "xi_he": self.xi_he,
            "xi_eh": self.xi_eh,
            "n": self.n,
            "m1": self.m1,
            "m2": self.m2,
            "enhancement": self.enhancement,
        }


def refractive_index(chi_e: complex, chi_m: complex, xi_eh: complex, xi_he: complex, gain: bool = False) -> complex:
    """
    n = sqrt(εμ − (ξEH + ξHE)²/4) + (i/2)(ξEH − ξHE), ε = 1 + χe, μ = 1 + χm.
    The root with Im >= 0 is taken for passive media, Im <= 0 with gain=True.
    """
    eps = 1.0 + complex(chi_e)
    mu = 1.0 + complex(chi_m)
    root = complex(np.sqrt(complex(eps * mu - 0.25 * (xi_eh + xi_he) ** 2)))
    if (not gain and root.imag < 0) or (gain and root.imag > 0):
        root = -root
    return root + 0.5j * (xi_eh - xi_he)


def cross_coherences(coeffs: ExpansionCoefficients, drive: DriveConfig) -> Tuple[complex, complex]:
    """
    In-phase cross coherences per unit probe: ρ̂21^(0,1) = c21·(Ω23/Ω32)·e^{iK·r}
    and ρ̂32^(1,0) = c32·(Ω12/Ω21)·e^{iK·r}. Both follow e^{i(ψ − 2φ + K·r)}.
    """
    loop = np.exp(-2j * drive.phi + 1j * drive.k_mismatch_phase)
    return complex(coeffs.c21 * loop), complex(coeffs.c32 * loop)


def assemble(
    coeffs: ExpansionCoefficients,
    medium: MediumParams,
    drive: DriveConfig,
    gain: bool = False,
) -> ResponseSet:
    N = medium.density_N
    d32, mu21 = medium.d32, medium.mu21
    mu0, c = medium.mu0, medium.c_light
    phase_dipole = np.exp(1j * medium.Phi)

    rho21_cross, rho32_cross = cross_coherences(coeffs, drive)
    if coeffs.branch == DETUNED:
        rho21_cross, rho32_cross = 0j, 0j

    chi_e = N * d32**2 * coeffs.d32
    chi_m = N * mu0 * mu21**2 * coeffs.d21
    xi_he = -1j * N * c * mu0 * d32 * mu21 * phase_dipole * rho21_cross
    xi_eh = 1j * N * c * mu0 * d32 * mu21 * np.conj(phase_dipole) * rho32_cross

    m1 = d32 * mu21 * medium.e_probe * phase_dipole * rho21_cross
    m2 = mu21**2 * medium.b_probe * coeffs.d21
    infinite = abs(m2) == 0
    enhancement = math.inf if infinite else float(abs(m1) / abs(m2))
    if infinite:
        logger.debug("direct magnetization is zero; enhancement reported as inf")

    n = refractive_index(chi_e, chi_m, xi_eh, xi_he, gain=gain)

    metadata = {
        "units": UNIT_CONVENTION,
        "prefactors": {"N": N, "mu0": mu0, "c": c, "E_p": medium.e_probe, "B_p": medium.b_probe},
        "branch": coeffs.branch,
        "sqrt_branch": GAIN if gain else PASSIVE,
        "loop_phase": drive.loop_phase,
        "enhancement_infinite": infinite,
    }

    return ResponseSet(
        chi_e=complex(chi_e),
        chi_m=complex(chi_m),
        xi_he=complex(xi_he),
        xi_eh=complex(xi_eh),
        n=n,
        m1=complex(m1),
        m2=complex(m2),
        enhancement=enhancement,
        metadata=metadata,
    )


def assemble_from_config(
    system: LevelSystem,
    drive: DriveConfig,
    medium: MediumParams,
    mode: str = CLOSED_LOOP,
    settings: ExtractionSettings = DEFAULT_SETTINGS,
    gain: bool = False,
) -> Tuple[ExpansionCoefficients, ResponseSet]:
    coeffs = extract_coefficients(system, drive, normalize_mode(mode), settings=settings)
    return coeffs, assemble(coeffs, medium, drive, gain=gain)
