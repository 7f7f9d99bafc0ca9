"""Adaptive integration of ``i da/dt = H(t) a`` and one-period propagators."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteState, StepSizeUnderflow
from .model import PeriodicHamiltonian, assemble

log = logging.getLogger(__name__)

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th- and embedded 4th-order weights
_E = _B - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


@dataclass(frozen=True)
class IntegratorSettings:
    """Step-control parameters.

    ``max_step`` is a fraction of the drive period (of the integration span
    for generic right-hand sides). ``initial_step`` is absolute; ``None``
    picks one automatically.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.05
    initial_step: float | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.max_step <= 1:
            raise ValueError("max_step must lie in (0, 1]")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")

    def scaled(self, factor: float) -> "IntegratorSettings":
        return IntegratorSettings(
            self.rel_tol * factor, self.abs_tol * factor, self.max_step, self.initial_step
        )


@dataclass
class Trajectory:
    """Sampled solution.

    ``states[k]`` is the state at ``times[k]``; states may be vectors or
    matrices (propagator columns).
    """

    times: np.ndarray
    states: np.ndarray
    step_count: int
    max_local_error_estimate: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    sample_times,
    settings: IntegratorSettings = IntegratorSettings(),
    max_step: float | None = None,
) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y)`` hitting every sample time exactly.

    Sample times must be monotone (either direction); the first one is the
    initial time. Steps are clipped so that each sample time is landed on
    rather than interpolated.
    """
    ts = np.asarray(sample_times, dtype=float)
    if ts.ndim != 1 or len(ts) < 1:
        raise ValueError("need at least one sample time")
    y = np.array(y0, dtype=complex)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("initial state is not finite")
    out = np.empty((len(ts),) + y.shape, dtype=complex)
    out[0] = y
    if len(ts) == 1:
        return Trajectory(ts, out, 0, 0.0)
    span = ts[-1] - ts[0]
    direction = 1.0 if span > 0 else -1.0
    if np.any(direction * np.diff(ts) <= 0):
        raise ValueError("sample times must be strictly monotone")
    hmax = abs(span) if max_step is None else max_step
    rtol, atol = settings.rel_tol, settings.abs_tol

    t = ts[0]
    h = settings.initial_step if settings.initial_step is not None else min(hmax, 1e-2 * abs(span)) * 0.1
    h = min(h, hmax)
    k1 = rhs(t, y)
    steps = 0
    max_err = 0.0
    for idx in range(1, len(ts)):
        target = ts[idx]
        while direction * (target - t) > 0:
            remaining = abs(target - t)
            last = h >= remaining * (1 - 1e-12)
            step = remaining if last else h
            if step < 1e-14 * max(abs(t), 1.0):
                raise StepSizeUnderflow(f"step size underflow at t={t:.6g}")
            dt = direction * step
            ks = [k1]
            with np.errstate(over="ignore", invalid="ignore"):
                for i in range(1, 7):
                    yi = y + dt * sum(a * k for a, k in zip(_A[i], ks))
                    ks.append(rhs(t + _C[i] * dt, yi))
                y_new = y + dt * sum(b * k for b, k in zip(_B[:6], ks[:6]))
                err_vec = dt * sum(e * k for e, k in zip(_E, ks))
                scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
                err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
            if not np.isfinite(err):
                raise NonFiniteState(f"non-finite state near t={t:.6g}")
            if err <= 1.0:
                t = target if last else t + dt
                y = y_new
                k1 = ks[6]  # FSAL
                steps += 1
                max_err = max(max_err, err)
                if not last:
                    factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
                    h = min(hmax, step * factor)
            else:
                h = step * max(0.2, 0.9 * err ** -0.2)
        out[idx] = y
    return Trajectory(ts, out, steps, max_err)


def schrodinger_rhs(h: PeriodicHamiltonian):
    blocks = list(h._blocks.items())
    h0 = h.h0
    w = h.omega

    def rhs(t, a):
        H = h0
        for k, b in blocks:
            H = H + np.exp(1j * k * w * t) * b
        return -1j * (H @ a)

    return rhs


def evolve(
    h: PeriodicHamiltonian,
    a0,
    t_span: tuple[float, float],
    samples: int = 2,
    settings: IntegratorSettings = IntegratorSettings(),
) -> Trajectory:
    """Integrate ``da/dt = -i H(t) a`` over ``t_span``.

    Args:
        h: the Hamiltonian.
        a0: initial state, length N (an N x K matrix propagates K columns).
        t_span: ``(t0, t1)``; ``t1 < t0`` integrates backward.
        samples: number of uniformly spaced output times, endpoints included.
        settings: step control.
    """
    a0 = np.asarray(a0, dtype=complex)
    if a0.shape[0] != h.dim:
        raise ValueError(f"state length {a0.shape[0]} does not match dimension {h.dim}")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    t0, t1 = map(float, t_span)
    if t0 == t1:
        raise ValueError("empty time span")
    times = np.linspace(t0, t1, samples)
    if not h._blocks and not np.any(h.h0):
        out = np.broadcast_to(a0, (samples,) + a0.shape).copy()
        return Trajectory(times, out, 0, 0.0)
    return integrate(schrodinger_rhs(h), a0, times, settings, settings.max_step * h.period)


def period_propagators(
    h: PeriodicHamiltonian, samples: int, settings: IntegratorSettings = IntegratorSettings()
) -> Trajectory:
    """Propagators ``U(t_k, 0)`` at ``samples`` uniform times over one period."""
    return evolve(h, np.eye(h.dim, dtype=complex), (0.0, h.period), samples, settings)


def monodromy(h: PeriodicHamiltonian, settings: IntegratorSettings = IntegratorSettings()) -> np.ndarray:
    """One-period propagator ``M = U(T, 0)``; column j evolves unit vector j."""
    M = period_propagators(h, 2, settings).final
    log.debug("monodromy |det M| = %.6g", abs(np.linalg.det(M)))
    return M
