"""
Brute-force path: integrate dR/dt = M(t)R + Σ(t) and project the quasi-steady
tail onto the harmonics 0, +Δ, −Δ.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from generator import HarmonicGenerator, relaxation_rates, rhs
from io_utils import write_trajectory_csv
from model import RHO11, RHO22, DensityVector, LoopResponseError, TRANSPOSE_INDEX

logger = logging.getLogger(__name__)

MIN_BEAT_PERIODS = 2
DEFAULT_SAMPLES_PER_PERIOD = 64


class StepFailure(LoopResponseError):
    pass


class WindowTooShort(LoopResponseError):
    pass


@dataclass(frozen=True, eq=False)
class IntegrationResult:
    times: np.ndarray  # accepted step times
    states: np.ndarray  # (len(times), 8)
    dense: Callable  # t -> (8,) or (8, len(t))
    transient_time: float
    t_end: float
    nfev: int = 0

    @property
    def endpoint(self) -> DensityVector:
        return DensityVector(self.states[-1])

    def trace_deviation(self) -> float:
        # ρ33 is reconstructed, so only imaginary parts of ρ11 and ρ22 can spoil the trace.
        return float(np.max(np.abs(self.states[:, RHO11].imag + self.states[:, RHO22].imag)))

    def hermiticity_deviation(self) -> float:
        paired = np.conj(self.states[:, list(TRANSPOSE_INDEX)])
        return float(np.max(np.abs(self.states - paired)))


class HarmonicProjection(NamedTuple):
    r0: np.ndarray
    r_plus: np.ndarray
    r_minus: np.ndarray
    window: Tuple[float, float]


def estimate_transient_time(gen: HarmonicGenerator, factor: float = 10.0) -> float:
    """factor / (slowest nonzero relaxation rate of M0)."""
    rates = relaxation_rates(gen)
    positive = rates[rates > 1e-12]
    if positive.size == 0:
        raise StepFailure("generator has no decaying mode; transient time is unbounded")
    return float(factor / positive.min())


def integrate(
    gen: HarmonicGenerator,
    initial: DensityVector,
    t_end: float,
    tol: float = 1e-10,
    transient_time: Optional[float] = None,
    atol: Optional[float] = None,
) -> IntegrationResult:
    """Adaptive Dormand-Prince 5(4) integration from t = 0 with dense output."""
    if t_end <= 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    transient = estimate_transient_time(gen) if transient_time is None else float(transient_time)
    if t_end < transient:
        logger.warning("t_end=%g shorter than the transient estimate %g", t_end, transient)

    y0 = np.array(initial.entries if isinstance(initial, DensityVector) else initial, dtype=complex)
    solution = solve_ivp(
        lambda t, y: rhs(t, y, gen),
        (0.0, float(t_end)),
        y0,
        method="RK45",
        rtol=tol,
        atol=tol * 1e-2 if atol is None else atol,
        dense_output=True,
    )
    if solution.status == -1:
        raise StepFailure(f"integration failed at t={solution.t[-1]:.6g}: {solution.message}")

    logger.debug("integrated to t=%g with %d steps, %d rhs calls", t_end, solution.t.size, solution.nfev)
    return IntegrationResult(
        times=solution.t,
        states=solution.y.T.copy(),
        dense=solution.sol,
        transient_time=transient,
        t_end=float(t_end),
        nfev=int(solution.nfev),
    )


def projection_window(result: IntegrationResult, delta: float, n_periods: Optional[int] = None) -> Tuple[float, float]:
    """Final window of an integer number of beat periods after the transient."""
    if delta == 0:
        return result.t_end, result.t_end
    period = 2 * math.pi / abs(delta)
    available = result.t_end - result.transient_time
    fit = int(math.floor(available / period + 1e-9))
    periods = fit if n_periods is None else int(n_periods)
    if periods < MIN_BEAT_PERIODS or periods > fit:
        raise WindowTooShort(
            f"need {max(periods, MIN_BEAT_PERIODS)} beat periods of {period:.4g} after t={result.transient_time:.4g}, "
            f"only {available:.4g} available"
        )
    return result.t_end - periods * period, result.t_end


def project_callable(
    trajectory: Callable, window: Tuple[float, float], delta: float, samples_per_period: int = DEFAULT_SAMPLES_PER_PERIOD
) -> HarmonicProjection:
    """
    Rectangle-rule Fourier integrals (1/T)∫ R(t) e^{−ikΔt} dt, k ∈ {0, +1, −1}.
    `trajectory` maps a time array to an (len(t), 8) array.
    """
    t0, t1 = window
    periods = max(1, int(round(abs(delta) * (t1 - t0) / (2 * math.pi))))
    count = periods * samples_per_period
    times = t0 + (t1 - t0) * np.arange(count) / count
    values = np.asarray(trajectory(times), dtype=complex)
    phase = np.exp(1j * delta * times)[:, None]
    return HarmonicProjection(
        r0=values.mean(axis=0),
        r_plus=(values / phase).mean(axis=0),
        r_minus=(values * phase).mean(axis=0),
        window=(float(t0), float(t1)),
    )


def project_harmonics(
    result: IntegrationResult,
    delta: float,
    n_periods: Optional[int] = None,
    samples_per_period: int = DEFAULT_SAMPLES_PER_PERIOD,
) -> HarmonicProjection:
    """At Δ = 0 the quasi-steady state is a fixed point: r0 is the endpoint and r± vanish."""
    if delta == 0:
        zeros = np.zeros(8, dtype=complex)
        return HarmonicProjection(
            r0=result.states[-1].copy(), r_plus=zeros, r_minus=zeros.copy(), window=(result.t_end, result.t_end)
        )
    window = projection_window(result, delta, n_periods)
    return project_callable(lambda t: result.dense(t).T, window, delta, samples_per_period)


def dump_trajectory_csv(result: IntegrationResult, path: str) -> str:
    return write_trajectory_csv(path, result.times, result.states)
