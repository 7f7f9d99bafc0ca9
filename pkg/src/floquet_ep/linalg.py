"""Dense complex linear algebra for small systems.

Everything here works on plain ``numpy`` arrays. Vectors are 1-D complex
arrays, matrices are square 2-D complex arrays; eigenvector collections are
stored row-wise (``vectors[n]`` is the n-th vector).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    LengthMismatch,
    NonConvergence,
    NotSolvable,
    NotSquare,
    SingularMatrix,
)

#: relative singular-value threshold below which a matrix counts as singular
SINGULAR_RTOL = 1e-10
MAX_DIM = 16


@dataclass(frozen=True)
class EigenDecomposition:
    """Sorted eigenpairs of a square matrix.

    Attributes:
        values: eigenvalues, sorted by real part then imaginary part.
        right_vectors: ``right_vectors[n]`` satisfies ``A v = values[n] v``.
        left_vectors: ``left_vectors[n]`` satisfies
            ``A^H u = conj(values[n]) u``.
        condition: 2-norm condition number of the right-eigenvector matrix.
    """

    values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    condition: float

    def __len__(self) -> int:
        return len(self.values)


def as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def gauge_fix(v: np.ndarray) -> np.ndarray:
    """Scale to unit norm with the first largest-magnitude entry real-positive."""
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return v.copy()
    v = v / nrm
    mag = np.abs(v)
    # first index within rounding of the maximum, so ties resolve stably
    k = int(np.flatnonzero(mag >= mag.max() * (1.0 - 1e-12))[0])
    return v * (np.conj(v[k]) / mag[k])


def sort_order(values: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Indices sorting complex values by (Re, Im), robust to rounding noise."""
    values = np.asarray(values, dtype=complex)
    if scale is None:
        scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    grid = 1e-11 * scale
    re = np.round(values.real / grid)
    im = np.round(values.imag / grid)
    return np.lexsort((im, re))


def eig(A, tol: float = 1e-10) -> EigenDecomposition:
    """Eigen-decomposition with paired left vectors.

    Backed by LAPACK's Hessenberg/QR driver. Right vectors are gauge-fixed
    (unit norm, largest entry real-positive); left vectors are unit-norm
    eigenvectors of ``A^H``. Vectors failing the residual check are
    recomputed as singular vectors of ``A - lambda I``.

    Raises:
        NotSquare: ``A`` is not square.
        NonConvergence: LAPACK failed, or a residual exceeds
            ``tol * ||A|| * ||v||``.
    """
    A = as_square(A)
    n = A.shape[0]
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds the dense small-N limit {MAX_DIM}")
    try:
        w, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NonConvergence(str(exc)) from exc

    order = sort_order(w)
    w = w[order]
    right = np.array([gauge_fix(vr[:, k]) for k in order])
    left = np.array([gauge_fix(vl[:, k]) for k in order])

    norm_a = np.linalg.norm(A, 2)
    bound = tol * max(norm_a, 1.0)
    eye = np.eye(n)
    AH = A.conj().T
    for k, lam in enumerate(w):
        bad_r = np.linalg.norm(A @ right[k] - lam * right[k]) > bound
        bad_l = np.linalg.norm(AH @ left[k] - np.conj(lam) * left[k]) > bound
        if not (bad_r or bad_l):
            continue
        # balancing inside geev can wreck vectors of badly scaled matrices;
        # recover them as the smallest singular vectors of A - lam I
        u, _, vh = np.linalg.svd(A - lam * eye)
        if bad_r:
            right[k] = gauge_fix(vh[-1].conj())
        if bad_l:
            left[k] = gauge_fix(u[:, -1])
        if (np.linalg.norm(A @ right[k] - lam * right[k]) > bound
                or np.linalg.norm(AH @ left[k] - np.conj(lam) * left[k]) > bound):
            raise NonConvergence(f"eigen-residual too large for eigenvalue {lam}")

    sv = np.linalg.svd(right.T, compute_uv=False)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    return EigenDecomposition(w, right, left, max(condition, 1.0))


def smallest_singular_ratio(A) -> float:
    sv = np.linalg.svd(np.asarray(A, dtype=complex), compute_uv=False)
    return float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0


def solve(A, b, tol: float = 1e-9) -> np.ndarray:
    """Solve ``A x = b``, refusing near-singular ``A``.

    Raises:
        SingularMatrix: ``sigma_min < 1e-10 * sigma_max``. Inside the
            Fourier recursion this means a multi-photon resonance.
    """
    A = as_square(A)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != A.shape[0]:
        raise LengthMismatch(f"rhs length {b.shape[0]} != matrix size {A.shape[0]}")
    if smallest_singular_ratio(A) < SINGULAR_RTOL:
        raise SingularMatrix("matrix is numerically singular")
    x = np.linalg.solve(A, b)
    resid = np.linalg.norm(A @ x - b)
    if resid > tol * (np.linalg.norm(A, 2) * np.linalg.norm(x) + np.linalg.norm(b)):
        raise SingularMatrix(f"solve residual {resid:.3e} exceeds tolerance")
    return x


def solve_singular(A, d, null_left, null_right, tol: float = 1e-8) -> np.ndarray:
    """Solve ``A x = d`` for ``A`` with a one-dimensional kernel.

    ``null_right`` spans ``ker A`` and ``null_left`` spans ``ker A^H``. The
    returned solution has no component along ``null_right`` in the
    biorthogonal sense, i.e. ``<null_left, x> = 0``.

    Raises:
        NotSolvable: ``|<null_left, d>|`` exceeds ``tol * ||null_left|| * ||d||``.
    """
    A = as_square(A)
    d = np.asarray(d, dtype=complex)
    u = np.asarray(null_left, dtype=complex)
    r = np.asarray(null_right, dtype=complex)
    n = A.shape[0]
    if not (d.shape[0] == u.shape[0] == r.shape[0] == n):
        raise LengthMismatch("vector lengths do not match the matrix")

    ud = binner(u, d)
    scale = np.linalg.norm(u) * max(np.linalg.norm(d), np.linalg.norm(A, 2) * np.linalg.norm(r))
    if abs(ud) > tol * scale:
        raise NotSolvable(f"solvability violated: <null_left, d> = {ud:.3e}")
    ur = binner(u, r)
    if abs(ur) < 1e-12 * np.linalg.norm(u) * np.linalg.norm(r):
        raise SingularMatrix("kernel vectors are orthogonal: eigenvalue is not semisimple")

    # remove the rounding-level component outside range(A), then solve the
    # bordered system [[A, r], [u^H, 0]] which is regular for a simple zero
    d = d - r * (ud / ur)
    bordered = np.zeros((n + 1, n + 1), dtype=complex)
    bordered[:n, :n] = A
    bordered[:n, n] = r
    bordered[n, :n] = np.conj(u)
    rhs = np.concatenate([d, [0.0]])
    sol = np.linalg.solve(bordered, rhs)
    x = sol[:n]
    resid = np.linalg.norm(A @ x - d)
    if resid > tol * max(np.linalg.norm(A, 2) * np.linalg.norm(x) + np.linalg.norm(d), 1e-300):
        raise NotSolvable(f"deflated solve residual {resid:.3e} exceeds tolerance")
    return x


def binner(x, y) -> complex:
    """Scalar product ``sum(conj(x) * y)``, conjugate-linear in ``x``."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape:
        raise LengthMismatch(f"length mismatch: {x.shape} vs {y.shape}")
    return complex(np.vdot(x, y))
