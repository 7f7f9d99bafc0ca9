"""Quasi-energies, Floquet exceptional points and Fourier-series eigenstates.

Indices in this module are 0-based positions in the sorted spectrum of
``H0`` (ascending real part), so index 0 is the lowest level.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import linalg
from .errors import (
    DegenerateInput,
    InsufficientData,
    NotResonant,
    SingularMatrix,
    TruncationNotConverged,
)
from .model import PeriodicHamiltonian, assemble, fourier_blocks

log = logging.getLogger(__name__)

DEFECTIVITY_THRESHOLD = 1e-4
NEAR_RESONANCE_BAND = 1e-3
L_MAX_CAP = 512


def fold(lam: float, omega: float) -> float:
    """Fold ``lam`` into the quasi-energy interval ``[-|omega|/2, |omega|/2)``."""
    w = abs(omega)
    if w == 0:
        raise ValueError("omega must be nonzero")
    r = lam - w * round(lam / w)
    # the upper edge belongs to the lower end of the interval
    if r >= w / 2 * (1 - 1e-12):
        r -= w
    elif r < -w / 2:
        r += w
    return r


@dataclass
class FloquetSpectrum:
    """Eigen-data of a monodromy matrix.

    Attributes:
        quasi_energies: ``mu_n`` with real parts in ``[-|omega|/2, |omega|/2)``.
        multipliers: monodromy eigenvalues ``exp(-i mu_n T)``.
        floquet_vectors: unit-norm monodromy eigenvectors, one per row.
        defectivity: smallest singular value of the eigenvector matrix.
        omega: signed drive frequency.
        semisimple: False when a numerically degenerate cluster of multipliers
            has fewer independent eigenvectors than its size.
    """

    quasi_energies: np.ndarray
    multipliers: np.ndarray
    floquet_vectors: np.ndarray
    defectivity: float
    omega: float
    semisimple: bool = True

    @property
    def period(self) -> float:
        return 2 * math.pi / abs(self.omega)

    @property
    def ep_flag(self) -> bool:
        """Numerical EP signature: nearly parallel eigenvectors of a defective cluster."""
        return self.defectivity < DEFECTIVITY_THRESHOLD and not self.semisimple

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.quasi_energies.imag)))


def _semisimple(M: np.ndarray, rho: np.ndarray, rtol: float = 1e-6) -> bool:
    """Check geometric == algebraic multiplicity for clusters of close multipliers."""
    n = len(rho)
    scale = max(np.linalg.norm(M, 2), 1.0)
    cluster_tol = 1e-3
    seen = np.zeros(n, dtype=bool)
    for i in range(n):
        if seen[i]:
            continue
        members = [j for j in range(n) if abs(rho[j] - rho[i]) < cluster_tol * scale]
        for j in members:
            seen[j] = True
        k = len(members)
        if k < 2:
            continue
        centre = np.mean(rho[members])
        sv = np.linalg.svd(M - centre * np.eye(n), compute_uv=False)
        if sv[n - k] > rtol * scale:
            return False
    return True


def quasi_energies(M, omega: float, tol: float = 1e-10) -> FloquetSpectrum:
    """Quasi-energies ``mu = (i/T) log rho`` from a monodromy matrix.

    The principal logarithm already places ``Re mu`` in
    ``[-|omega|/2, |omega|/2)``; :func:`fold` is applied on top to settle the
    boundary.
    """
    M = linalg.as_square(M)
    T = 2 * math.pi / abs(omega)
    dec = linalg.eig(M, tol=max(tol, 1e-12))
    rho = dec.values
    mu = 1j * np.log(rho) / T
    mu = np.array([fold(m.real, omega) + 1j * m.imag for m in mu])
    order = linalg.sort_order(mu, scale=abs(omega))
    mu, rho, vecs = mu[order], rho[order], dec.right_vectors[order]
    defect = float(np.linalg.svd(vecs.T, compute_uv=False)[-1])
    return FloquetSpectrum(mu, rho, vecs, defect, float(omega), _semisimple(M, rho))


@dataclass
class EPReport:
    """Predicted multi-photon resonances among the levels of ``H0``.

    ``subsets[i]`` lists level indices in ascending eigenvalue order;
    ``dominant_cw[i]`` and ``dominant_ccw[i]`` are the levels whose Floquet
    state survives the coalescence for ``omega > 0`` and ``omega < 0``.
    ``harmonic_table`` maps an ordered index pair to the photon number
    ``round((lam_j - lam_i)/|omega|)`` for resonant pairs.
    """

    subsets: list[tuple[int, ...]] = field(default_factory=list)
    orders: list[int] = field(default_factory=list)
    dominant_cw: list[int] = field(default_factory=list)
    dominant_ccw: list[int] = field(default_factory=list)
    harmonic_table: dict[tuple[int, int], int] = field(default_factory=dict)
    near_resonances: list[tuple[int, int]] = field(default_factory=list)

    @property
    def has_ep(self) -> bool:
        return bool(self.subsets)

    def subset_of(self, index: int) -> tuple[int, ...] | None:
        for s in self.subsets:
            if index in s:
                return s
        return None


def predict_ep(h0_eigs: Sequence[float], omega: float, eps_res: float = 1e-9) -> EPReport:
    """Group levels whose spacings are integer multiples of ``omega``.

    Two levels are linked when ``(lam_m - lam_n)/omega`` lies within
    ``eps_res`` of a nonzero integer; resonant subsets are the connected
    components with at least two members.

    Raises:
        DegenerateInput: two eigenvalues coincide within ``eps_res * |omega|``.
    """
    lam = np.real(np.asarray(h0_eigs, dtype=complex))
    w = abs(omega)
    n = len(lam)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    report = EPReport()
    for i in range(n):
        for j in range(i + 1, n):
            x = (lam[j] - lam[i]) / w
            if abs(x) < eps_res:
                raise DegenerateInput(f"levels {i} and {j} are not distinct")
            g = round(x)
            off = abs(x - g)
            if g != 0 and off < eps_res:
                parent[find(i)] = find(j)
                lo, hi = (i, j) if lam[i] < lam[j] else (j, i)
                report.harmonic_table[(lo, hi)] = abs(g)
            elif off < NEAR_RESONANCE_BAND:
                report.near_resonances.append((i, j))
                log.warning("levels %d and %d are within %.1e of a resonance", i, j, off)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    comps = [sorted(g, key=lambda k: lam[k]) for g in groups.values() if len(g) >= 2]
    comps.sort(key=lambda g: lam[g[0]])
    for g in comps:
        report.subsets.append(tuple(g))
        report.orders.append(len(g))
        report.dominant_cw.append(g[0])
        report.dominant_ccw.append(g[-1])
    return report


@dataclass
class FourierFloquetState:
    """Truncated Fourier representation of a (generalized) Floquet state.

    The state is ``exp(-i energy t) sum_l (a_l + gamma t b_l) exp(i l omega t)``
    where ``energy`` is the unfolded level that seeded the recursion and
    ``mu = fold(energy)``.
    """

    mu: complex
    energy: complex
    omega: float
    coeffs: dict[int, np.ndarray]
    secular_coeffs: dict[int, np.ndarray] | None = None
    gamma: complex | None = None
    solvability: complex | None = None

    @property
    def l_min(self) -> int:
        keys = list(self.coeffs) + list(self.secular_coeffs or {})
        return min(keys)

    @property
    def l_max(self) -> int:
        keys = list(self.coeffs) + list(self.secular_coeffs or {})
        return max(keys)

    def _periodic_parts(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        dim = len(next(iter(self.coeffs.values())))
        a = np.zeros((len(t), dim), dtype=complex)
        da = np.zeros_like(a)
        for l, c in self.coeffs.items():
            ph = np.exp(1j * l * self.omega * t)[:, None]
            a += ph * c
            da += 1j * l * self.omega * ph * c
        b = np.zeros_like(a)
        db = np.zeros_like(a)
        for l, c in (self.secular_coeffs or {}).items():
            ph = np.exp(1j * l * self.omega * t)[:, None]
            b += ph * c
            db += 1j * l * self.omega * ph * c
        return t, a, da, b, db

    def evaluate(self, t) -> np.ndarray:
        """State at time(s) ``t``; returns shape (len(t), N)."""
        t, a, _, b, _ = self._periodic_parts(t)
        g = self.gamma or 0.0
        return np.exp(-1j * self.energy * t)[:, None] * (a + g * t[:, None] * b)

    def derivative(self, t) -> np.ndarray:
        t, a, da, b, db = self._periodic_parts(t)
        g = self.gamma or 0.0
        env = np.exp(-1j * self.energy * t)[:, None]
        body = a + g * t[:, None] * b
        return env * (-1j * self.energy * body + da + g * b + g * t[:, None] * db)

    def residual(self, h: PeriodicHamiltonian, t) -> float:
        """Largest relative residual ``||i F' - H F|| / ||F||`` over ``t``."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        F = self.evaluate(ts)
        dF = self.derivative(ts)
        worst = 0.0
        for k, tk in enumerate(ts):
            r = np.linalg.norm(1j * dF[k] - assemble(h, tk) @ F[k])
            worst = max(worst, r / np.linalg.norm(F[k]))
        return worst


def _h0_spectrum(h: PeriodicHamiltonian) -> linalg.EigenDecomposition:
    return linalg.eig(h.h0)


def _default_l_max(lam: np.ndarray, n: int, omega: float) -> int:
    gap = max(math.ceil(abs(lam[m] - lam[n]) / abs(omega)) for m in range(len(lam)))
    return 8 * (1 + gap)


def _recursion(h, energy, seeds: dict[int, np.ndarray], start: int, l_max: int,
               blocks, extra=None) -> dict[int, np.ndarray]:
    """Fill ``a_l`` for ``start <= l <= l_max`` from
    ``(energy - l omega - H0) a_l = sum_k S^(k) a_{l-k} + extra(l)``."""
    coeffs = dict(seeds)
    n = h.dim
    eye = np.eye(n)
    for l in range(start, l_max + 1):
        rhs = np.zeros(n, dtype=complex)
        for k, S in blocks.items():
            prev = coeffs.get(l - k)
            if prev is not None:
                rhs = rhs + S @ prev
        if extra is not None:
            rhs = rhs + extra(l)
        if not np.any(rhs):
            coeffs[l] = rhs
            continue
        coeffs[l] = linalg.solve((energy - l * h.omega) * eye - h.h0, rhs)
    return coeffs


def _tail_ok(coeffs: dict[int, np.ndarray], l_max: int, tol: float) -> bool:
    peak = max(np.linalg.norm(c) for c in coeffs.values())
    if peak == 0:
        return True
    return np.linalg.norm(coeffs[l_max]) <= tol * peak


def build_floquet_state(
    h: PeriodicHamiltonian,
    n: int,
    l_max: int | None = None,
    trunc_tol: float = 1e-10,
    seed=None,
) -> FourierFloquetState:
    """Floquet eigenstate seeded by level ``n`` of ``H0``.

    Runs the one-sided recursion ``a_0 = w_n``,
    ``a_l = (lam_n - l omega - H0)^{-1} sum_k S^(k) a_{l-k}``, doubling
    ``l_max`` until the last coefficient is below ``trunc_tol`` relative to the
    largest. ``seed`` replaces the gauge-fixed eigenvector ``w_n`` by any
    other eigenvector of the same level.

    Raises:
        SingularMatrix: ``lam_n - l omega`` hits another level, i.e. this
            level's Floquet state collapses at a Floquet EP for this loop
            direction.
        TruncationNotConverged: tail did not decay by ``l_max = 512``.
    """
    dec = _h0_spectrum(h)
    lam = dec.values
    if not 0 <= n < h.dim:
        raise IndexError(f"level index {n} out of range")
    blocks = fourier_blocks(h)
    energy = lam[n]
    if l_max is None:
        l_max = _default_l_max(lam.real, n, h.omega)
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    w_n = dec.right_vectors[n]
    if seed is not None:
        w_n = np.asarray(seed, dtype=complex)
        if np.linalg.norm(h.h0 @ w_n - energy * w_n) > 1e-10 * max(1.0, np.linalg.norm(w_n)):
            raise ValueError(f"seed is not an eigenvector of H0 for level {n}")
    coeffs = {0: w_n}
    done = 0
    while True:
        coeffs = _recursion(h, energy, coeffs, done + 1, l_max, blocks)
        done = l_max
        if _tail_ok(coeffs, l_max, trunc_tol):
            break
        if l_max >= L_MAX_CAP:
            raise TruncationNotConverged(f"Fourier tail not below {trunc_tol} at l_max={l_max}")
        l_max = min(2 * l_max, L_MAX_CAP)
    mu = fold(energy.real, h.omega) + 1j * energy.imag
    return FourierFloquetState(complex(mu), complex(energy), h.omega, coeffs)


def build_generalized_state(
    h: PeriodicHamiltonian,
    y1: int,
    y2: int,
    l_max: int | None = None,
    trunc_tol: float = 1e-10,
    res_tol: float = 1e-8,
) -> FourierFloquetState:
    """Generalized Floquet state with a linear secular term at an order-2 EP.

    The level whose Floquet state survives the coalescence (the upper one for
    ``omega < 0``, the lower one for ``omega > 0``) seeds the secular part
    ``b_l`` and fixes ``mu``; the partner level seeds ``a_{-G}``. ``gamma``
    follows from solvability of the singular ``l = 0`` equation, whose
    solution is taken with no component along the surviving eigenvector.

    Raises:
        NotResonant: the two levels are not ``G |omega|`` apart.
        SingularMatrix: a third level intrudes into the recursion.
    """
    dec = _h0_spectrum(h)
    lam = dec.values
    w = h.omega
    if y1 == y2:
        raise ValueError("need two distinct levels")
    # survivor p has partner q reached at l = -G with G > 0
    x = (lam[y2] - lam[y1]).real / w
    p, q = (y1, y2) if x > 0 else (y2, y1)
    G = round(abs(x))
    if G == 0 or abs(abs(x) - G) > res_tol * max(1.0, abs(x)):
        raise NotResonant(f"levels {y1}, {y2} differ by {abs(x):.12g} photons")

    blocks = fourier_blocks(h)
    energy = lam[p]
    w_p = dec.right_vectors[p]
    w_p_adj = dec.left_vectors[p]
    if l_max is None:
        l_max = _default_l_max(lam.real, p, w)

    b = {0: w_p}
    b = _recursion(h, energy, b, 1, l_max, blocks)

    a = {-G: dec.right_vectors[q]}
    a = _recursion(h, energy, a, -G + 1, -1, blocks)

    feed = np.zeros(h.dim, dtype=complex)
    for k, S in blocks.items():
        if 1 <= k <= G:
            feed = feed + S @ a[-k]
    gamma = -1j * linalg.binner(w_p_adj, feed) / linalg.binner(w_p_adj, w_p)
    d = feed - 1j * gamma * w_p
    a[0] = linalg.solve_singular(energy * np.eye(h.dim) - h.h0, d, w_p_adj, w_p)

    def secular(l):
        return -1j * gamma * b[l]

    done = 0
    while True:
        a = _recursion(h, energy, a, done + 1, l_max, blocks, extra=secular)
        done = l_max
        if _tail_ok(a, l_max, trunc_tol) and _tail_ok(b, l_max, trunc_tol):
            break
        if l_max >= L_MAX_CAP:
            raise TruncationNotConverged(f"Fourier tail not below {trunc_tol} at l_max={l_max}")
        new_max = min(2 * l_max, L_MAX_CAP)
        b = _recursion(h, energy, b, l_max + 1, new_max, blocks)
        l_max = new_max
    mu = fold(energy.real, w) + 1j * energy.imag
    return FourierFloquetState(
        complex(mu), complex(energy), w, a, b, complex(gamma), linalg.binner(w_p_adj, d)
    )


@dataclass(frozen=True)
class GeneralizedBasisCoeffs:
    beta: dict[tuple[int, int], complex]

    def __getitem__(self, key: tuple[int, int]) -> complex:
        return self.beta[key]


def beta_coeffs(n_max: int) -> GeneralizedBasisCoeffs:
    """Table of ``beta(n, k) = i^k n!/(n-k)!`` for ``0 <= k <= n <= n_max``."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if n_max > 12:
        raise OverflowError("n_max above 12 leaves the exact-integer range")
    powers = [1, 1j, -1, -1j]
    beta = {}
    for n in range(n_max + 1):
        for k in range(n + 1):
            beta[(n, k)] = complex(powers[k % 4] * (math.factorial(n) // math.factorial(n - k)))
    return GeneralizedBasisCoeffs(beta)


def secular_exponent(samples: Sequence[tuple[float, float]]) -> float:
    """Power-law exponent of ``||a(mT)||`` from the trailing half of samples."""
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[0] < 10:
        raise InsufficientData("need at least 10 stroboscopic samples")
    t, norm = data[:, 0], data[:, 1]
    if np.any(t <= 0) or np.any(norm <= 0):
        raise InsufficientData("times and norms must be positive")
    tail = data[len(data) // 2:]
    slope, _ = np.polyfit(np.log(tail[:, 0]), np.log(tail[:, 1]), 1)
    return float(slope)


@dataclass
class JordanChain:
    """Order-2 Jordan chain of the Floquet generator at a defective quasi-energy."""

    mu: complex
    q: np.ndarray
    Q: np.ndarray
    nilpotent_norm: float

    @property
    def ratio(self) -> float:
        return float(np.linalg.norm(self.Q) / np.linalg.norm(self.q))


def floquet_generator(M, omega: float) -> np.ndarray:
    """``R = (i/T) log M`` via the Schur-based principal matrix logarithm."""
    T = 2 * math.pi / abs(omega)
    L = scipy.linalg.logm(linalg.as_square(M), disp=False)[0]
    return 1j * L / T


def jordan_chain(M, omega: float) -> JordanChain:
    """Extract ``q`` and ``Q`` with ``(R - mu) Q = q`` for the closest pair of quasi-energies.

    The two-dimensional generalized eigenspace is the numerical kernel of
    ``(R - mu)^2``; inside it ``R - mu`` is nilpotent of rank one. ``q`` is
    unit-norm and ``Q`` is the minimum-norm chain vector.
    """
    R = floquet_generator(M, omega)
    n = R.shape[0]
    if n < 2:
        raise ValueError("need at least two levels")
    mus = np.linalg.eigvals(R)
    best = min(((i, j) for i in range(n) for j in range(i + 1, n)),
               key=lambda ij: abs(mus[ij[0]] - mus[ij[1]]))
    mu = 0.5 * (mus[best[0]] + mus[best[1]])
    D = R - mu * np.eye(n)
    _, _, vh = np.linalg.svd(D @ D)
    K = vh[-2:].conj().T  # orthonormal basis of the generalized eigenspace
    Nk = K.conj().T @ D @ K
    u, s, vh2 = np.linalg.svd(Nk)
    q = K @ u[:, 0]
    Q = K @ (vh2[0].conj() / s[0])
    return JordanChain(complex(mu), q, Q, float(s[0]))
