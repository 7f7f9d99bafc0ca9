"""Periodically driven Hamiltonians with one-sided Fourier drives.

A :class:`PeriodicHamiltonian` is ``H(t) = H0 + sum_k R_k(t) H_k`` where each
scalar drive ``R_k(t) = sum_{n>=1} R_k^(n) exp(i n omega t)`` carries only
positive harmonics. The loop direction lives in the sign of ``omega``:
``omega > 0`` is clockwise, ``omega < 0`` counter-clockwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ParameterOutOfRange, UnknownPreset

PRESETS = ("longhi3", "sqrt2")


def _frozen_matrix(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DriveTerm:
    """One coupling matrix with its scalar drive's harmonic coefficients."""

    matrix: np.ndarray
    harmonics: Mapping[int, complex]

    def __post_init__(self):
        m = _frozen_matrix(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"drive matrix must be square, got {m.shape}")
        harm = {}
        for n, c in dict(self.harmonics).items():
            if int(n) != n or int(n) < 1:
                raise ValueError(f"harmonic index must be a positive integer, got {n!r}")
            harm[int(n)] = complex(c)
        if not any(c != 0 for c in harm.values()):
            raise ValueError("drive needs at least one nonzero harmonic coefficient")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "harmonics", MappingProxyType(dict(sorted(harm.items()))))

    def amplitude(self, t: float, omega: float) -> complex:
        return sum(c * np.exp(1j * n * omega * t) for n, c in self.harmonics.items())

    def amplitude_rate(self, t: float, omega: float) -> complex:
        return sum(1j * n * omega * c * np.exp(1j * n * omega * t) for n, c in self.harmonics.items())


@dataclass(frozen=True)
class ModelPreset:
    name: str
    parameters: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class PeriodicHamiltonian:
    """Time-periodic Hamiltonian; immutable once built.

    Attributes:
        h0: static part.
        drives: drive terms.
        omega: signed cycling frequency.
        preset: the preset this instance was built from, if any.
    """

    h0: np.ndarray
    drives: tuple[DriveTerm, ...]
    omega: float
    preset: ModelPreset | None = None

    def __post_init__(self):
        h0 = _frozen_matrix(self.h0)
        if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
            raise ValueError(f"h0 must be square, got {h0.shape}")
        drives = tuple(self.drives)
        for d in drives:
            if d.matrix.shape != h0.shape:
                raise ValueError("drive matrices must match h0 in shape")
        if not math.isfinite(self.omega) or self.omega == 0:
            raise ValueError("omega must be finite and nonzero")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "drives", drives)
        object.__setattr__(self, "omega", float(self.omega))
        blocks: dict[int, np.ndarray] = {}
        for d in drives:
            for n, c in d.harmonics.items():
                blocks[n] = blocks.get(n, 0) + c * d.matrix
        object.__setattr__(self, "_blocks", {k: _frozen_matrix(blocks[k]) for k in sorted(blocks)})

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def period(self) -> float:
        return 2 * math.pi / abs(self.omega)

    def with_omega(self, omega: float) -> "PeriodicHamiltonian":
        return PeriodicHamiltonian(self.h0, self.drives, omega, self.preset)

    def __call__(self, t: float) -> np.ndarray:
        return assemble(self, t)


def assemble(h: PeriodicHamiltonian, t: float) -> np.ndarray:
    """``H(t) = H0 + sum_k S^(k) exp(i k omega t)``."""
    out = np.array(h.h0)
    for k, block in h._blocks.items():
        out = out + np.exp(1j * k * h.omega * t) * block
    return out


def fourier_blocks(h: PeriodicHamiltonian) -> dict[int, np.ndarray]:
    """Harmonic blocks ``S^(k) = sum_j R_j^(k) H_j`` keyed by ``k >= 1``."""
    return {k: np.array(b) for k, b in h._blocks.items()}


def longhi3_matrices(Omega: float) -> tuple[np.ndarray, np.ndarray]:
    h0 = np.array(
        [[0, 1, 0], [Omega**2 / 2, 0, 1], [0, Omega**2 / 2, 0]], dtype=complex
    )
    h1 = np.array([[0, 0, 0], [1, 0, 0], [0, -1, 0]], dtype=complex)
    return h0, h1


def sqrt2_matrices(Omega: float) -> tuple[np.ndarray, np.ndarray]:
    h0 = np.array([[0, 1], [Omega**2, 0]], dtype=complex)
    h1 = np.array([[0, 0], [1, 0]], dtype=complex)
    return h0, h1


def preset(p: ModelPreset | str, omega: float, **parameters) -> PeriodicHamiltonian:
    """Build a builtin model.

    ``longhi3`` is the three-level example whose instantaneous eigenvalues
    are pinned at ``(-Omega, 0, Omega)``; ``sqrt2`` is a two-level model with
    eigenvalues ``+-sqrt(Omega^2 + R(t))``. Both take ``Omega`` and ``R0`` and
    are driven by ``R(t) = R0 exp(i omega t)``.

    Raises:
        UnknownPreset: unrecognised name.
        ParameterOutOfRange: ``Omega <= 0``, or ``|R0| >= Omega^2`` for sqrt2.
    """
    if isinstance(p, str):
        p = ModelPreset(p, parameters)
    elif parameters:
        p = ModelPreset(p.name, {**p.parameters, **parameters})
    if p.name not in PRESETS:
        raise UnknownPreset(f"unknown preset {p.name!r}; choose from {PRESETS}")
    unknown = set(p.parameters) - {"Omega", "R0"}
    if unknown:
        raise ParameterOutOfRange(f"unexpected parameters for {p.name}: {sorted(unknown)}")
    Omega = float(p.parameters.get("Omega", 1.0))
    R0 = float(p.parameters.get("R0", 0.2))
    if not Omega > 0:
        raise ParameterOutOfRange("Omega must be positive")
    if p.name == "longhi3":
        h0, h1 = longhi3_matrices(Omega)
    else:
        if abs(R0) >= Omega**2:
            raise ParameterOutOfRange("sqrt2 needs |R0| < Omega^2 to keep the branch point outside the loop")
        h0, h1 = sqrt2_matrices(Omega)
    p = ModelPreset(p.name, MappingProxyType({"Omega": Omega, "R0": R0}))
    drives = (DriveTerm(h1, {1: R0}),) if R0 != 0 else ()
    return PeriodicHamiltonian(h0, drives, omega, p)


def drive_value(h: PeriodicHamiltonian, t: float) -> complex:
    """Scalar drive ``R(t)`` of a single-drive model (zero if undriven)."""
    if not h.drives:
        return 0j
    if len(h.drives) > 1:
        raise ValueError("drive_value needs a single-drive model")
    return h.drives[0].amplitude(t, h.omega)


def analytic_frame_longhi3(Omega: float, R: complex):
    """Closed-form instantaneous eigenframe of the longhi3 model.

    No normalisation is applied: right vectors have first entry 1 and left
    vectors last entry 1.

    Returns:
        ``(sigma, e, e_adj)`` with ``sigma`` of shape (3,) and ``e``,
        ``e_adj`` of shape (3, 3), one vector per row.
    """
    if not Omega > 0:
        raise ParameterOutOfRange("Omega must be positive")
    half = Omega**2 / 2
    Rc = np.conj(R)
    sigma = np.array([-Omega, 0.0, Omega], dtype=complex)
    e = np.array(
        [[1, -Omega, half - R], [1, 0, -half - R], [1, Omega, half - R]], dtype=complex
    )
    e_adj = np.array(
        [[half + Rc, -Omega, 1], [-half + Rc, 0, 1], [half + Rc, Omega, 1]], dtype=complex
    )
    return sigma, e, e_adj
