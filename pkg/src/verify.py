"""
Property suites that cross-check the Floquet extraction against the closed forms,
the time-domain integration and the preset shape checks.

fast: every oracle, a handful of time-domain points at moderate γ3.
full: adds more time-domain points, the strong-field limits and the γ3 = α² integration.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from analytic import (
    general_coherences,
    incoherent_coherences,
    incoherent_populations,
    incoherent_zero_absorption_pump,
    population_forms,
    resonant_coherences,
    strong_field_populations,
)
from floquet_solver import extract_coefficients, solve_harmonics, zeroth_order_populations
from generator import build_generator
from model import ALPHA, CLOSED_LOOP, INCOHERENT, RHO21, RHO32, DensityVector, DriveConfig, LevelSystem, MediumParams
from response import assemble
from scan import ScanSpec, run_scan, scan_spec_from_preset, shape_checks
from timedomain_oracle import HarmonicProjection, estimate_transient_time, integrate, project_harmonics
from worker import extremal_direct_terms, run_point

logger = logging.getLogger(__name__)

FAST = "fast"
FULL = "full"
SUITES = (FAST, FULL)

ORACLE_RTOL = 1e-9
INCOHERENT_RTOL = 1e-10
TIMEDOMAIN_RTOL = 1e-5
CROSS_LEAK_RTOL = 1e-6
PROBE_SCALING_RTOL = 1e-4


@dataclass
class PropertyOutcome:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass
class VerifyReport:
    suite: str
    seed: int
    outcomes: List[PropertyOutcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    def summary(self) -> Dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "passed": self.passed,
            "properties": [
                {"name": o.name, "passed": o.passed, "detail": o.detail, "seconds": round(o.seconds, 3)}
                for o in self.outcomes
            ],
        }


def relative_gap(a: complex, b: complex, floor: float = 1e-13) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def _worst(pairs) -> float:
    return max((relative_gap(a, b) for a, b in pairs), default=0.0)


def random_closed_loop_point(rng: np.random.Generator, resonant: bool) -> Tuple[LevelSystem, DriveConfig]:
    gamma3 = ALPHA**2 if rng.random() < 0.5 else 0.1
    delta2, delta3 = rng.uniform(-5, 5, size=2)
    delta1 = delta2 + delta3 if resonant else rng.uniform(-5, 5)
    drive = DriveConfig(
        omega31_mag=rng.uniform(0.1, 5),
        psi=rng.uniform(0, 2 * math.pi),
        phi=rng.uniform(0, 2 * math.pi),
        delta1=float(delta1),
        delta2=float(delta2),
        delta3=float(delta3),
    )
    return LevelSystem(gamma3=gamma3), drive


def check_general_oracle(rng: np.random.Generator, points: int = 100) -> PropertyOutcome:
    worst = 0.0
    for _ in range(points):
        system, drive = random_closed_loop_point(rng, resonant=False)
        numeric = extract_coefficients(system, drive, CLOSED_LOOP, apply_selection_rule=False)
        closed = general_coherences(system, drive)
        worst = max(worst, _worst((getattr(numeric, k), getattr(closed, k)) for k in ("d21", "c21", "d32", "c32")))
    return PropertyOutcome("general-detuning closed forms", worst <= ORACLE_RTOL, f"{points} points, worst relative gap {worst:.2e}")


def check_resonant_oracle(rng: np.random.Generator, points: int = 100) -> PropertyOutcome:
    worst = 0.0
    for _ in range(points):
        system, drive = random_closed_loop_point(rng, resonant=True)
        numeric = extract_coefficients(system, drive, CLOSED_LOOP)
        closed = resonant_coherences(system, drive)
        worst = max(worst, _worst((getattr(numeric, k), getattr(closed, k)) for k in ("d21", "c21", "d32", "c32")))
    return PropertyOutcome("resonant closed forms", worst <= ORACLE_RTOL, f"{points} points, worst relative gap {worst:.2e}")


def check_incoherent_oracle(rng: np.random.Generator, points: int = 50) -> PropertyOutcome:
    worst_numeric = 0.0
    worst_rebuilt = 0.0
    for _ in range(points):
        system = LevelSystem(gamma1=rng.uniform(0.2, 2), gamma2=rng.uniform(0.2, 2), gamma3=rng.uniform(1e-4, 0.5))
        drive = DriveConfig(omega31_mag=0.0, r1=rng.uniform(0, 4), delta2=rng.uniform(-4, 4), delta3=rng.uniform(-4, 4))
        numeric = extract_coefficients(system, drive, INCOHERENT)
        closed = incoherent_coherences(system, drive.r1, drive.delta2, drive.delta3)
        rebuilt = population_forms(system, drive, INCOHERENT)
        worst_numeric = max(worst_numeric, _worst([(numeric.d21, closed.d21), (numeric.d32, closed.d32)]))
        worst_rebuilt = max(worst_rebuilt, _worst([(rebuilt.d21, closed.d21), (rebuilt.d32, closed.d32)]))
    passed = worst_numeric <= INCOHERENT_RTOL and worst_rebuilt <= 1e-12
    return PropertyOutcome(
        "incoherent closed forms",
        passed,
        f"{points} points, solver gap {worst_numeric:.2e}, population rebuild gap {worst_rebuilt:.2e}",
    )


def check_selection_rule(rng: np.random.Generator, points: int = 20) -> PropertyOutcome:
    medium = MediumParams()
    leaks = 0
    for _ in range(points):
        system, drive = random_closed_loop_point(rng, resonant=False)
        response = assemble(extract_coefficients(system, drive), medium, drive)
        if response.xi_he != 0 or response.xi_eh != 0 or response.m1 != 0:
            leaks += 1
    return PropertyOutcome("selection rule", leaks == 0, f"{leaks} of {points} detuned points carry chirality")


def check_enhancement() -> PropertyOutcome:
    system, drive, medium = LevelSystem(), DriveConfig(), MediumParams()
    point = run_point(system, drive, medium)
    ratio = abs(point.coefficients.c21) / abs(point.coefficients.d21)
    band = 1 / ALPHA / 10 <= point.response.enhancement <= 10 / ALPHA
    passed = band and 0.1 <= ratio <= 10
    return PropertyOutcome(
        "enhancement", passed, f"|c21|/|d21| = {ratio:.4f}, |m1|/|m2| = {point.response.enhancement:.2f}"
    )


def check_zero_absorption_root() -> PropertyOutcome:
    system = LevelSystem()
    root = incoherent_zero_absorption_pump(system)
    below = incoherent_coherences(system, root * (1 - 1e-6), 0.0, 0.0).d21.imag
    above = incoherent_coherences(system, root * (1 + 1e-6), 0.0, 0.0).d21.imag
    expected = 2 * ALPHA**2 / (1 - ALPHA**2)
    electric = all(incoherent_coherences(system, r1, 0.0, 0.0).d32.imag > 0 for r1 in np.linspace(0.1, 4, 40))
    passed = below > 0 > above and math.isclose(root, expected, rel_tol=1e-12) and electric
    return PropertyOutcome("zero-absorption pump", passed, f"root {root:.6e}, Im d21 {below:.2e} -> {above:.2e}")


def check_degenerate_rates() -> PropertyOutcome:
    system = LevelSystem(gamma1=1.0, gamma2=0.3, gamma3=0.3)
    drive = DriveConfig(omega31_mag=0.0, r1=1.0)
    value = abs(extract_coefficients(system, drive, INCOHERENT).d32)
    return PropertyOutcome("gamma2 = gamma3 electric term", value <= 1e-14, f"|d32| = {value:.2e}")


def check_phase_laws(rng: np.random.Generator, points: int = 10) -> PropertyOutcome:
    system = LevelSystem()
    worst = 0.0
    for _ in range(points):
        base = DriveConfig(phi=rng.uniform(0, 2 * math.pi), psi=rng.uniform(0, 2 * math.pi))
        d_phi, d_psi, d_big_phi = rng.uniform(-math.pi, math.pi, size=3)
        medium = MediumParams(Phi=rng.uniform(0, 2 * math.pi))
        shifted_drive = base.with_updates(phi=base.phi + d_phi, psi=base.psi + d_psi)
        shifted_medium = MediumParams(Phi=medium.Phi + d_big_phi)
        r0 = assemble(extract_coefficients(system, base), medium, base)
        r1 = assemble(extract_coefficients(system, shifted_drive), shifted_medium, shifted_drive)
        loop = d_psi - 2 * d_phi
        worst = max(
            worst,
            relative_gap(r1.xi_he, r0.xi_he * np.exp(1j * (loop + d_big_phi))),
            relative_gap(r1.xi_eh, r0.xi_eh * np.exp(1j * (loop - d_big_phi))),
            abs(abs(r1.chi_e) - abs(r0.chi_e)) / abs(r0.chi_e),
            abs(abs(r1.chi_m) - abs(r0.chi_m)) / abs(r0.chi_m),
        )
    return PropertyOutcome("phase laws", worst <= 1e-8, f"{points} points, worst gap {worst:.2e}")


def check_time_domain(rng: np.random.Generator, points: int) -> PropertyOutcome:
    worst = 0.0
    started = time.perf_counter()
    for _ in range(points):
        system = LevelSystem(gamma3=rng.uniform(0.05, 0.2))
        delta = rng.choice([-1, 1]) * rng.uniform(0.3, 1.0)
        delta2, delta3 = rng.uniform(-1, 1, size=2)
        drive = DriveConfig(
            omega31_mag=rng.uniform(0.5, 2.0),
            omega32_mag=1e-4,
            omega21_mag=1e-4,
            delta2=float(delta2),
            delta3=float(delta3),
            delta1=float(delta2 + delta3 - delta),
            psi=rng.uniform(0, 2 * math.pi),
            phi=rng.uniform(0, 2 * math.pi),
        )
        worst = max(worst, time_domain_gap(system, drive))
    return PropertyOutcome(
        "time-domain harmonics",
        worst <= TIMEDOMAIN_RTOL,
        f"{points} points, worst relative gap {worst:.2e} in {time.perf_counter() - started:.1f}s",
    )


def project_time_domain(
    system: LevelSystem, drive: DriveConfig, mode: str = CLOSED_LOOP, factor: float = 25.0, tol: float = 1e-10
) -> HarmonicProjection:
    """Integrate from the ground state past the transient and project four beat periods."""
    gen = build_generator(system, drive, mode)
    transient = estimate_transient_time(gen, factor=factor)
    tail = 4 * 2 * math.pi / abs(gen.delta) if gen.delta != 0 else 0.0
    result = integrate(gen, DensityVector.ground(), transient + tail, tol=tol, transient_time=transient)
    return project_harmonics(result, gen.delta)


def time_domain_gap(system: LevelSystem, drive: DriveConfig, mode: str = CLOSED_LOOP, factor: float = 25.0, tol: float = 1e-10) -> float:
    """Largest relative gap between projected and Floquet harmonics (k = 0, ±1)."""
    floquet = solve_harmonics(build_generator(system, drive, mode))
    projected = project_time_domain(system, drive, mode, factor, tol)
    gaps = []
    for k, proj in ((0, projected.r0), (1, projected.r_plus), (-1, projected.r_minus)):
        expected = floquet.amplitude(k)
        gaps.append(float(np.linalg.norm(proj - expected) / np.linalg.norm(expected)))
    return max(gaps)


def check_cross_harmonics(system: Optional[LevelSystem] = None, delta: float = 0.5) -> PropertyOutcome:
    """
    Detuned loop integrated in time. With only Omega32 on, rho21 has no k = +1 part.
    With only Omega21 on, rho32 has no k = 0 part. Doubling Omega21 doubles k = ±1.
    """
    system = system or LevelSystem(gamma3=0.1)
    base = DriveConfig(omega31_mag=1.0, delta2=delta)
    electric = project_time_domain(system, base.with_updates(omega32_mag=1e-4, omega21_mag=0.0))
    magnetic = project_time_domain(system, base.with_updates(omega32_mag=0.0, omega21_mag=1e-4))
    doubled = project_time_domain(system, base.with_updates(omega32_mag=0.0, omega21_mag=2e-4))

    rho21_leak = abs(electric.r_plus[RHO21]) / abs(electric.r0[RHO21])
    rho32_leak = abs(magnetic.r0[RHO32]) / abs(magnetic.r_minus[RHO32])
    scaling = max(
        float(np.linalg.norm(doubled.r_plus - 2 * magnetic.r_plus) / np.linalg.norm(2 * magnetic.r_plus)),
        float(np.linalg.norm(doubled.r_minus - 2 * magnetic.r_minus) / np.linalg.norm(2 * magnetic.r_minus)),
    )
    passed = rho21_leak <= CROSS_LEAK_RTOL and rho32_leak <= CROSS_LEAK_RTOL and scaling <= PROBE_SCALING_RTOL
    return PropertyOutcome(
        "time-domain cross harmonics",
        passed,
        f"rho21 k=+1 leak {rho21_leak:.2e}, rho32 k=0 leak {rho32_leak:.2e}, doubling gap {scaling:.2e}",
    )


def check_incoherent_endpoint(r1: float = 1.0) -> PropertyOutcome:
    system = LevelSystem(gamma3=0.1)
    drive = DriveConfig(omega31_mag=0.0, omega32_mag=0.0, omega21_mag=0.0, r1=r1)
    endpoint = DensityVector(project_time_domain(system, drive, INCOHERENT).r0).populations
    expected = incoherent_populations(system, r1)
    gap = max(abs(a - b) / b for a, b in zip(endpoint, expected))
    return PropertyOutcome("incoherent time-domain populations", gap <= 1e-8, f"relative gap {gap:.2e}")


def check_strong_field() -> PropertyOutcome:
    system = LevelSystem()
    drive = DriveConfig(omega31_mag=1e3)
    rho11, rho22, rho33 = zeroth_order_populations(system, drive)
    limits = strong_field_populations(system)
    gaps = [abs(a - b) / b for a, b in zip((rho11, rho22, rho33), limits)]
    terms, _ = extremal_direct_terms(system, drive)
    signs = terms["d21"].imag < 0 and terms["d32"].imag > 0
    passed = max(gaps) <= 0.01 and signs
    return PropertyOutcome(
        "strong-field limits",
        passed,
        f"population gaps {max(gaps):.2e}, Im d21 {terms['d21'].imag:.3e}, Im d32 {terms['d32'].imag:.3e}",
    )


def check_alpha_squared_integration() -> PropertyOutcome:
    system = LevelSystem()
    drive = DriveConfig(omega32_mag=1e-4, omega21_mag=1e-4, delta2=0.5)
    gen = build_generator(system, drive)
    result = integrate(gen, DensityVector.ground(), 2e5, tol=1e-8, transient_time=2e5 - 8 * 2 * math.pi / 0.5)
    projected = project_harmonics(result, gen.delta)
    floquet = solve_harmonics(gen)
    gap = max(
        float(np.linalg.norm(p - floquet.amplitude(k)) / np.linalg.norm(floquet.amplitude(k)))
        for k, p in ((0, projected.r0), (1, projected.r_plus), (-1, projected.r_minus))
    )
    return PropertyOutcome("alpha^2 integration", gap <= 1e-4, f"relative gap {gap:.2e}")


def check_presets(presets: Dict[str, Dict], parallelism: int = 1) -> List[PropertyOutcome]:
    outcomes = []
    for name, preset in presets.items():
        spec = scan_spec_from_preset(name, preset, LevelSystem(), DriveConfig(), MediumParams())
        result = run_scan(spec, parallelism=parallelism)
        for check in shape_checks(result):
            outcomes.append(PropertyOutcome(f"{name}: {check.name}", check.passed, check.detail))
    return outcomes


def check_scan_point_consistency(rng: np.random.Generator) -> PropertyOutcome:
    spec = ScanSpec(mode=CLOSED_LOOP, axis="delta3", range=(-4.0, 4.0, 9), outputs=("d21", "d32", "chi_e", "xi_he"))
    result = run_scan(spec)
    worst = 0.0
    for index in rng.choice(len(result.rows), size=3, replace=False):
        row = result.rows[int(index)]
        point = run_point(spec.system, spec.drive.with_updates(delta3=row.axis_value), spec.medium)
        worst = max(worst, relative_gap(row.values["re_d21"] + 1j * row.values["im_d21"], point.coefficients.d21))
    return PropertyOutcome("scan/point consistency", worst <= 1e-12, f"worst gap {worst:.2e}")


def run_verify(suite: str = FAST, seed: int = 0, presets: Optional[Dict[str, Dict]] = None, parallelism: int = 1) -> VerifyReport:
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {SUITES}, got {suite!r}")
    rng = np.random.default_rng(seed)
    report = VerifyReport(suite=suite, seed=seed)

    checks: List[Tuple[str, Callable[[], object]]] = [
        ("general-detuning closed forms", lambda: check_general_oracle(rng)),
        ("resonant closed forms", lambda: check_resonant_oracle(rng)),
        ("incoherent closed forms", lambda: check_incoherent_oracle(rng)),
        ("selection rule", lambda: check_selection_rule(rng)),
        ("enhancement", check_enhancement),
        ("zero-absorption pump", check_zero_absorption_root),
        ("gamma2 = gamma3 electric term", check_degenerate_rates),
        ("phase laws", lambda: check_phase_laws(rng)),
        ("scan/point consistency", lambda: check_scan_point_consistency(rng)),
        ("time-domain harmonics", lambda: check_time_domain(rng, points=3 if suite == FAST else 20)),
        ("time-domain cross harmonics", check_cross_harmonics),
        ("incoherent time-domain populations", check_incoherent_endpoint),
    ]
    if presets:
        checks.append(("preset shapes", lambda: check_presets(presets, parallelism)))
    if suite == FULL:
        checks.extend([("strong-field limits", check_strong_field), ("alpha^2 integration", check_alpha_squared_integration)])

    for name, check in checks:
        started = time.perf_counter()
        try:
            outcome = check()
        except Exception as exc:
            outcome = PropertyOutcome(name, False, f"{type(exc).__name__}: {exc}")
        elapsed = time.perf_counter() - started
        for item in outcome if isinstance(outcome, list) else [outcome]:
            item.seconds = elapsed
            level = logging.INFO if item.passed else logging.ERROR
            logger.log(level, "%s %s: %s", "PASS" if item.passed else "FAIL", item.name, item.detail)
            report.outcomes.append(item)
    return report
