"""Instantaneous eigenframes, complex Berry phases and adiabatic amplitudes.

A frame at time ``t`` holds the instantaneous eigenvalues ``sigma_n``, right
eigenvectors ``e_n`` of ``H(t)`` and adjoint partners ``e_adj_n`` (eigenvectors
of ``H(t)^H``), stored row-wise. A state is decomposed as
``a(t) = sum_n f_n(t) e_n(t) exp(-i int_0^t sigma_n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import linear_sum_assignment

from . import linalg
from .errors import AmbiguousMatching, BadSpan, GapCollapse, VanishingNorm
from .model import PeriodicHamiltonian, analytic_frame_longhi3, assemble, drive_value
from .propagate import IntegratorSettings, Trajectory, integrate

MAX_REFINE_DEPTH = 4  # 200 samples/cycle refine up to 3200


@dataclass
class FrameSample:
    t: float
    sigma: np.ndarray
    e: np.ndarray
    e_adj: np.ndarray
    phase_accum: np.ndarray
    berry_accum: np.ndarray


@dataclass
class AdiabaticTrajectory:
    frames: list[FrameSample]
    amplitudes: np.ndarray  # (samples, N)
    source: Trajectory

    @property
    def times(self) -> np.ndarray:
        return self.source.times

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def reconstruct(self) -> np.ndarray:
        out = np.empty_like(self.source.states)
        for k, fr in enumerate(self.frames):
            weights = self.amplitudes[k] * np.exp(-1j * fr.phase_accum)
            out[k] = weights @ fr.e
        return out

    def reconstruction_error(self) -> float:
        """Largest relative mismatch between the source states and the expansion."""
        rec = self.reconstruct()
        err = np.linalg.norm(rec - self.source.states, axis=1)
        scale = np.maximum(np.linalg.norm(self.source.states, axis=1), 1e-300)
        return float(np.max(err / scale))


def _is_periodic_grid(times: np.ndarray, period: float | None) -> bool:
    if period is None or len(times) < 4:
        return False
    dt = np.diff(times)
    uniform = np.allclose(dt, dt[0], rtol=1e-9, atol=0)
    return uniform and math.isclose(times[-1] - times[0], period, rel_tol=1e-10)


def _angular_freqs(times: np.ndarray) -> np.ndarray:
    S = len(times) - 1
    nu = 2 * np.pi * np.fft.fftfreq(S, d=times[1] - times[0])
    if S % 2 == 0:
        nu[S // 2] = 0.0  # drop the ambiguous Nyquist mode
    return nu


def spectral_derivative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Derivative along axis 0 of samples covering exactly one period (endpoint repeated)."""
    nu = _angular_freqs(times)
    c = np.fft.fft(values[:-1], axis=0)
    shape = (-1,) + (1,) * (values.ndim - 1)
    d = np.fft.ifft(1j * nu.reshape(shape) * c, axis=0)
    return np.concatenate([d, d[:1]], axis=0)


def spectral_cumulative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Antiderivative from ``times[0]`` of a periodic sampled function, exact per Fourier mode."""
    S = len(times) - 1
    nu = _angular_freqs(times)
    c = np.fft.fft(values[:-1], axis=0) / S
    shape = (-1,) + (1,) * (values.ndim - 1)
    inv = np.zeros_like(nu)
    nz = nu != 0
    inv[nz] = 1.0 / nu[nz]
    d = c * (-1j * inv).reshape(shape)
    d[0] = 0.0
    if S % 2 == 0:
        d[S // 2] = 0.0
    g = np.fft.ifft(d, axis=0) * S
    tau = (times - times[0]).reshape(shape)
    out = np.empty(values.shape, dtype=complex)
    out[:-1] = c[0] * tau[:-1] + g - g[0]
    out[-1] = c[0] * tau[-1]
    return out


def _derivative(times, values, periodic: bool) -> np.ndarray:
    if periodic:
        return spectral_derivative(times, values)
    return np.gradient(values, times, axis=0, edge_order=2 if len(times) > 2 else 1)


def _cumulative(times, values, periodic: bool) -> np.ndarray:
    if periodic:
        return spectral_cumulative(times, values)
    return cumulative_trapezoid(values, times, axis=0, initial=0)


def _connection(e: np.ndarray, e_adj: np.ndarray, de: np.ndarray) -> np.ndarray:
    """``<e_adj_n, de_n> / <e_adj_n, e_n>`` for every sample and level."""
    num = np.einsum("kni,kni->kn", e_adj.conj(), de)
    den = np.einsum("kni,kni->kn", e_adj.conj(), e)
    if np.any(np.abs(den) < 1e-12):
        raise VanishingNorm("biorthogonal norm vanishes: frame sits on a static EP")
    return num / den


def _numeric_frame(H: np.ndarray, gap_tol: float):
    dec = linalg.eig(H)
    sig = dec.values
    n = len(sig)
    if n > 1:
        scale = max(float(np.max(np.abs(sig))), 1e-300)
        gaps = [abs(sig[i] - sig[j]) for i in range(n) for j in range(i + 1, n)]
        if min(gaps) < gap_tol * scale:
            raise GapCollapse(f"instantaneous eigenvalues closer than {gap_tol:g} relative")
    return sig, dec.right_vectors, dec.left_vectors


def _match(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """Permutation aligning ``cur`` rows with ``prev`` rows by overlap magnitude."""
    pn = prev / np.linalg.norm(prev, axis=1, keepdims=True)
    cn = cur / np.linalg.norm(cur, axis=1, keepdims=True)
    ov = np.abs(pn.conj() @ cn.T)
    rows, cols = linear_sum_assignment(-ov)
    perm = cols[np.argsort(rows)]
    for i in range(len(perm)):
        best = ov[i, perm[i]]
        others = np.delete(ov[i], perm[i])
        if others.size and others.max() > 0.99 * best:
            raise AmbiguousMatching(f"level {i}: overlaps within 1%")
    return perm


def _numeric_frames(h: PeriodicHamiltonian, times: np.ndarray, gap_tol: float):
    sigmas, rights, lefts = [], [], []

    def tracked(t_prev, prev_vecs, t, depth):
        sig, r, l = _numeric_frame(assemble(h, t), gap_tol)
        try:
            perm = _match(prev_vecs, r)
        except AmbiguousMatching:
            if depth >= MAX_REFINE_DEPTH:
                raise
            mid = 0.5 * (t_prev + t)
            _, r_mid, _ = tracked(t_prev, prev_vecs, mid, depth + 1)
            return tracked(mid, r_mid, t, depth + 1)
        return sig[perm], r[perm], l[perm]

    sig, r, l = _numeric_frame(assemble(h, times[0]), gap_tol)
    for k, t in enumerate(times):
        if k:
            sig, r, l = tracked(times[k - 1], rights[-1], t, 0)
        sigmas.append(sig)
        rights.append(r)
        lefts.append(l)
    sigma = np.array(sigmas)
    right = np.array(rights)
    left = np.array(lefts)

    # smooth single-valued gauge: <reference_n, e_n(t)> = 1 with the reference
    # the gauge-fixed unit vector at the first sample
    ref = right[0]
    ov = np.einsum("ni,kni->kn", ref.conj(), right)
    if np.any(np.abs(ov) < 1e-3):
        raise AmbiguousMatching("eigenvector drifted orthogonal to its gauge reference")
    right = right / ov[:, :, None]
    norm = np.einsum("kni,kni->kn", left.conj(), right)
    left = left / norm.conj()[:, :, None]
    return sigma, right, left


def _analytic_frames(h: PeriodicHamiltonian, times: np.ndarray):
    if h.preset is None or h.preset.name != "longhi3":
        raise ValueError("analytic_longhi3 mode needs a longhi3 preset Hamiltonian")
    Omega = h.preset.parameters["Omega"]
    out = [analytic_frame_longhi3(Omega, drive_value(h, t)) for t in times]
    return tuple(np.array(x) for x in zip(*out))


def frame_along(
    h: PeriodicHamiltonian,
    times: Sequence[float],
    mode: str = "numeric",
    gap_tol: float = 1e-6,
) -> list[FrameSample]:
    """Instantaneous eigenframes along ``times`` with accumulated phases.

    ``numeric`` mode diagonalises ``H(t)`` at every sample, tracks levels by
    maximal overlap (bisecting intervals where the matching is ambiguous) and
    applies a smooth gauge. ``analytic_longhi3`` uses the closed-form frame in
    its native gauge. Dynamic phases ``int sigma_n`` and Berry phases
    ``phi_n(t) = -i int <e_adj_n, de_n>/<e_adj_n, e_n>`` are accumulated
    spectrally when ``times`` is a uniform grid spanning exactly one period,
    and by the trapezoid rule otherwise.

    Raises:
        GapCollapse: two instantaneous eigenvalues (numeric mode) nearly coincide.
        AmbiguousMatching: level tracking failed even after refinement.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise ValueError("need at least two sample times")
    if mode == "numeric":
        sigma, e, e_adj = _numeric_frames(h, times, gap_tol)
    elif mode == "analytic_longhi3":
        sigma, e, e_adj = _analytic_frames(h, times)
    else:
        raise ValueError(f"unknown frame mode {mode!r}")
    periodic = _is_periodic_grid(times, h.period)
    phase = _cumulative(times, sigma, periodic)
    de = _derivative(times, e, periodic)
    berry = -1j * _cumulative(times, _connection(e, e_adj, de), periodic)
    return [
        FrameSample(float(t), sigma[k], e[k], e_adj[k], phase[k], berry[k])
        for k, t in enumerate(times)
    ]


def _stack(frames: Sequence[FrameSample]):
    times = np.array([f.t for f in frames])
    return (
        times,
        np.array([f.sigma for f in frames]),
        np.array([f.e for f in frames]),
        np.array([f.e_adj for f in frames]),
    )


def mean_sigma(frames: Sequence[FrameSample], period: float) -> np.ndarray:
    """Cycle average of each instantaneous eigenvalue (trapezoid rule)."""
    times, sigma, _, _ = _stack(frames)
    if not math.isclose(times[-1] - times[0], period, rel_tol=1e-9):
        raise BadSpan(f"frames span {times[-1] - times[0]:.12g}, expected one period {period:.12g}")
    return trapezoid(sigma, times, axis=0) / period


def berry_phase(frames: Sequence[FrameSample], n: int, method: str = "spectral") -> complex:
    """Closed-loop complex Berry phase of level ``n``.

    ``spectral`` differentiates the eigenvector samples by FFT (the frames
    must form a uniform closed loop, last sample repeating the first);
    ``central`` uses second-order finite differences. Both integrate with the
    trapezoid rule.
    """
    times, _, e, e_adj = _stack(frames)
    if method == "spectral":
        if not np.allclose(e[-1], e[0], rtol=1e-8, atol=1e-10):
            raise BadSpan("frames do not close: last eigenvector differs from the first")
        de = spectral_derivative(times, e)
    elif method == "central":
        de = np.gradient(e, times, axis=0, edge_order=2)
    else:
        raise ValueError(f"unknown method {method!r}")
    A = _connection(e, e_adj, de)[:, n]
    return complex(-1j * trapezoid(A, times))


def project(traj: Trajectory, frames: Sequence[FrameSample]) -> AdiabaticTrajectory:
    """Adiabatic amplitudes ``f_n(t)`` of a sampled state trajectory."""
    times, _, e, e_adj = _stack(frames)
    if len(times) != len(traj.times) or not np.allclose(times, traj.times, rtol=1e-12, atol=1e-12):
        raise ValueError("trajectory and frames are sampled at different times")
    states = traj.states
    num = np.einsum("kni,ki->kn", e_adj.conj(), states)
    den = np.einsum("kni,kni->kn", e_adj.conj(), e)
    if np.any(np.abs(den) < 1e-12):
        raise VanishingNorm("biorthogonal norm vanishes")
    phase = np.array([f.phase_accum for f in frames])
    amps = num / den * np.exp(1j * phase)
    return AdiabaticTrajectory(list(frames), amps, traj)


def adiabatic_states(frames: Sequence[FrameSample]) -> np.ndarray:
    """``p_n(t) = e_n(t) exp(-i phi_n(t) - i int sigma_n)``; shape (samples, N, N)."""
    out = []
    for f in frames:
        out.append(f.e * np.exp(-1j * (f.berry_accum + f.phase_accum))[:, None])
    return np.array(out)


def rwa_predict_longhi3(Omega: float, R0: complex, omega: float, f0, times) -> np.ndarray:
    """Rotating-wave amplitudes ``f_n(t) = f_n(0) exp(-i phi_n(t))`` for longhi3."""
    times = np.asarray(times, dtype=float)
    f0 = np.asarray(f0, dtype=complex)
    R = R0 * np.exp(1j * omega * times)
    phi1 = 1j * (R - R0) / (2 * Omega**2)
    phis = np.stack([phi1, -2 * phi1, phi1], axis=1)
    return f0[None, :] * np.exp(-1j * phis)


def exact_amplitude_rhs_longhi3(Omega: float, R0: complex, omega: float, t: float, f) -> np.ndarray:
    """Right-hand side of the exact amplitude equations of the longhi3 model."""
    f = np.asarray(f, dtype=complex)
    Rdot = 1j * omega * R0 * np.exp(1j * omega * t)
    c = Rdot / (2 * Omega**2)
    p = np.exp(1j * Omega * t)
    return np.array(
        [
            c * (f[0] + f[1] / p + f[2] / p**2),
            -2 * c * (f[0] * p + f[1] + f[2] / p),
            c * (f[0] * p**2 + f[1] * p + f[2]),
        ]
    )


def integrate_amplitudes_longhi3(
    Omega: float,
    R0: complex,
    omega: float,
    f0,
    times,
    settings: IntegratorSettings = IntegratorSettings(),
) -> Trajectory:
    def rhs(t, f):
        return exact_amplitude_rhs_longhi3(Omega, R0, omega, t, f)

    times = np.asarray(times, dtype=float)
    max_step = settings.max_step * 2 * math.pi / abs(omega)
    return integrate(rhs, np.asarray(f0, dtype=complex), times, settings, max_step)
