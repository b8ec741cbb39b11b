"""
Transformed equations of motion of the three-level ladder as harmonic blocks.

    dR/dt = M(t) R + Σ(t),
    M(t)  = M0 + M+ Ω21 e^{iΔt} + M- Ω12 e^{-iΔt}   (same split for Σ)

with R = (ρ11, ρ12, ρ13, ρ21, ρ22, ρ23, ρ31, ρ32) and ρ33 = 1 - ρ11 - ρ22
eliminated at build time.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from model import (
    CLOSED_LOOP,
    INCOHERENT,
    RHO11,
    RHO12,
    RHO13,
    RHO21,
    RHO22,
    RHO23,
    RHO31,
    RHO32,
    DensityVector,
    DriveConfig,
    LevelSystem,
    LoopResponseError,
    normalize_mode,
)

logger = logging.getLogger(__name__)


class ModeMismatch(LoopResponseError):
    pass


@dataclass(frozen=True, eq=False)
class HarmonicGenerator:
    m0: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray
    sigma0: np.ndarray
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray
    delta: float
    omega21: complex
    mode: str

    @property
    def omega12(self) -> complex:
        return complex(np.conj(self.omega21))

    def matrix(self, t: float) -> np.ndarray:
        phase = np.exp(1j * self.delta * t)
        return self.m0 + self.m_plus * (self.omega21 * phase) + self.m_minus * (self.omega12 / phase)

    def inhomogeneity(self, t: float) -> np.ndarray:
        phase = np.exp(1j * self.delta * t)
        return self.sigma0 + self.sigma_plus * (self.omega21 * phase) + self.sigma_minus * (self.omega12 / phase)


def _effective_drive(drive: DriveConfig, mode: str) -> DriveConfig:
    if mode == CLOSED_LOOP:
        if drive.r1 != 0:
            raise ModeMismatch(f"closed_loop mode requires r1 = 0, got r1={drive.r1}")
        return drive
    if drive.omega31_mag != 0:
        raise ModeMismatch(f"incoherent mode requires omega31_mag = 0, got {drive.omega31_mag}")
    if drive.delta1 != 0:
        logger.warning("incoherent mode: delta1=%g overridden to 0", drive.delta1)
        return drive.with_updates(delta1=0.0)
    return drive


def build_generator(system: LevelSystem, drive: DriveConfig, mode: str = CLOSED_LOOP) -> HarmonicGenerator:
    mode = normalize_mode(mode)
    drive = _effective_drive(drive, mode)

    g1, g2, g3 = system.gamma1, system.gamma2, system.gamma3
    gs = system.gamma_s
    r1 = drive.r1
    d = drive.delta
    d1, d2, d3 = drive.delta1, drive.delta2, drive.delta3
    o31 = drive.omega31
    o13 = np.conj(o31)
    o32 = drive.omega32
    o23 = np.conj(o32)

    m0 = np.zeros((8, 8), dtype=complex)
    s0 = np.zeros(8, dtype=complex)

    # ρ11
    m0[RHO11, RHO11] = -r1 - (g1 + r1)
    m0[RHO11, RHO22] = g3 - (g1 + r1)
    s0[RHO11] = g1 + r1
    m0[RHO11, RHO31] = 1j * o13
    m0[RHO11, RHO13] = -1j * o31

    # ρ12 and ρ21
    m0[RHO12, RHO12] = -(1j * (d - d3) + 0.5 * (r1 + g3))
    m0[RHO12, RHO13] = -1j * o32
    m0[RHO12, RHO32] = 1j * o13
    m0[RHO21, RHO21] = -(-1j * (d - d3) + 0.5 * (r1 + g3))
    m0[RHO21, RHO31] = 1j * o23
    m0[RHO21, RHO23] = -1j * o31

    # ρ13 and ρ31; ρ11 - ρ33 = 2ρ11 + ρ22 - 1
    m0[RHO13, RHO13] = -(1j * (d - d2 - d3) + 0.5 * (2 * r1 + g1 + g2))
    m0[RHO13, RHO11] = -2j * o13
    m0[RHO13, RHO22] = -1j * o13
    s0[RHO13] = 1j * o13
    m0[RHO13, RHO12] = -1j * o23
    m0[RHO31, RHO31] = -(-1j * (d - d2 - d3) + 0.5 * (2 * r1 + g1 + g2))
    m0[RHO31, RHO11] = 2j * o31
    m0[RHO31, RHO22] = 1j * o31
    s0[RHO31] = -1j * o31
    m0[RHO31, RHO21] = 1j * o32

    # ρ22
    m0[RHO22, RHO22] = -g3 - g2
    m0[RHO22, RHO11] = -g2
    s0[RHO22] = g2
    m0[RHO22, RHO23] = -1j * o32
    m0[RHO22, RHO32] = 1j * o23

    # ρ23 and ρ32; ρ33 - ρ22 = 1 - ρ11 - 2ρ22
    m0[RHO23, RHO23] = -(-1j * d2 + 0.5 * (r1 + gs))
    m0[RHO23, RHO21] = -1j * o13
    m0[RHO23, RHO11] = -1j * o23
    m0[RHO23, RHO22] = -2j * o23
    s0[RHO23] = 1j * o23
    m0[RHO32, RHO32] = -(1j * d2 + 0.5 * (r1 + gs))
    m0[RHO32, RHO12] = 1j * o31
    m0[RHO32, RHO11] = 1j * o32
    m0[RHO32, RHO22] = 2j * o32
    s0[RHO32] = -1j * o32

    # Couplings multiplying Ω21 e^{iΔt}.
    m_plus = np.zeros((8, 8), dtype=complex)
    m_plus[RHO11, RHO12] = -1j
    m_plus[RHO21, RHO11] = 1j
    m_plus[RHO21, RHO22] = -1j
    m_plus[RHO22, RHO12] = 1j
    m_plus[RHO23, RHO13] = 1j
    m_plus[RHO31, RHO32] = -1j

    # Couplings multiplying Ω12 e^{-iΔt}.
    m_minus = np.zeros((8, 8), dtype=complex)
    m_minus[RHO11, RHO21] = 1j
    m_minus[RHO12, RHO11] = -1j
    m_minus[RHO12, RHO22] = 1j
    m_minus[RHO22, RHO21] = -1j
    m_minus[RHO13, RHO23] = 1j
    m_minus[RHO32, RHO31] = -1j

    for arr in (m0, m_plus, m_minus, s0):
        arr.setflags(write=False)
    zeros = np.zeros(8, dtype=complex)
    zeros.setflags(write=False)

    return HarmonicGenerator(
        m0=m0,
        m_plus=m_plus,
        m_minus=m_minus,
        sigma0=s0,
        sigma_plus=zeros,
        sigma_minus=zeros,
        delta=d,
        omega21=complex(drive.omega21),
        mode=mode,
    )


def rhs(t: float, state, gen: HarmonicGenerator) -> np.ndarray:
    """M(t)·state + Σ(t). Accepts a DensityVector or a raw 8-vector."""
    vec = state.entries if isinstance(state, DensityVector) else np.asarray(state, dtype=complex)
    return gen.matrix(t) @ vec + gen.inhomogeneity(t)


def eom_rhs(t: float, state, system: LevelSystem, drive: DriveConfig, mode: str = CLOSED_LOOP) -> np.ndarray:
    """Equations of motion written term by term, without the block split."""
    drive = _effective_drive(drive, normalize_mode(mode))
    r = state.entries if isinstance(state, DensityVector) else np.asarray(state, dtype=complex)
    r11, r12, r13, r21, r22, r23, r31, r32 = r
    r33 = 1.0 - r11 - r22

    g1, g2, g3, gs = system.gamma1, system.gamma2, system.gamma3, system.gamma_s
    r1 = drive.r1
    d, d2, d3 = drive.delta, drive.delta2, drive.delta3
    o31, o32, o21 = drive.omega31, drive.omega32, drive.omega21
    o13, o23, o12 = np.conj(o31), np.conj(o32), np.conj(o21)
    ep = np.exp(1j * d * t)
    em = np.exp(-1j * d * t)

    dr11 = (
        -r1 * r11 + g3 * r22 + (g1 + r1) * r33
        + 1j * em * o12 * r21 - 1j * ep * o21 * r12
        + 1j * o13 * r31 - 1j * o31 * r13
    )
    dr12 = (
        -(1j * (d - d3) + 0.5 * (r1 + g3)) * r12
        - 1j * o32 * r13 - 1j * em * o12 * (r11 - r22) + 1j * o13 * r32
    )
    dr13 = (
        -(1j * (d - d2 - d3) + 0.5 * (2 * r1 + g1 + g2)) * r13
        - 1j * o13 * (r11 - r33) - 1j * o23 * r12 + 1j * em * o12 * r23
    )
    dr22 = (
        -g3 * r22 + g2 * r33
        - 1j * em * o12 * r21 + 1j * ep * o21 * r12
        - 1j * o32 * r23 + 1j * o23 * r32
    )
    dr23 = (
        -(-1j * d2 + 0.5 * (r1 + gs)) * r23
        - 1j * o13 * r21 + 1j * ep * o21 * r13 + 1j * o23 * (r33 - r22)
    )
    # ρji equations are the complex conjugates of the ρij equations with ρij -> ρji.
    dr21 = (
        -(-1j * (d - d3) + 0.5 * (r1 + g3)) * r21
        + 1j * o23 * r31 + 1j * ep * o21 * (r11 - r22) - 1j * o31 * r23
    )
    dr31 = (
        -(-1j * (d - d2 - d3) + 0.5 * (2 * r1 + g1 + g2)) * r31
        + 1j * o31 * (r11 - r33) + 1j * o32 * r21 - 1j * ep * o21 * r32
    )
    dr32 = (
        -(1j * d2 + 0.5 * (r1 + gs)) * r32
        + 1j * o31 * r12 - 1j * em * o12 * r31 - 1j * o32 * (r33 - r22)
    )
    return np.array([dr11, dr12, dr13, dr21, dr22, dr23, dr31, dr32], dtype=complex)


def population_derivatives(
    t: float, state, system: LevelSystem, drive: DriveConfig, mode: str = CLOSED_LOOP
) -> Tuple[complex, complex, complex]:
    """(dρ11/dt, dρ22/dt, dρ33/dt), with dρ33/dt taken from its own equation of motion."""
    drive = _effective_drive(drive, normalize_mode(mode))
    r = state.entries if isinstance(state, DensityVector) else np.asarray(state, dtype=complex)
    r11, r13, r23, r31, r32 = r[RHO11], r[RHO13], r[RHO23], r[RHO31], r[RHO32]
    r33 = 1.0 - r[RHO11] - r[RHO22]
    o31, o32 = drive.omega31, drive.omega32
    dr33 = (
        -(system.gamma1 + system.gamma2 + drive.r1) * r33 + drive.r1 * r11
        + 1j * o31 * r13 - 1j * np.conj(o31) * r31
        + 1j * o32 * r23 - 1j * np.conj(o32) * r32
    )
    full = eom_rhs(t, state, system, drive, mode)
    return full[RHO11], full[RHO22], dr33


def relaxation_rates(gen: HarmonicGenerator) -> np.ndarray:
    """Decay rates -Re(λ) of the static generator, ascending."""
    return np.sort(-np.linalg.eigvals(gen.m0).real)
