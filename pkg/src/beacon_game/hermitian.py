"""Dense complex Hermitian linear algebra used by every solver.

Two eigensolver backends are available: a self-contained cyclic Jacobi
iteration and LAPACK (``numpy.linalg.eigh``). Both feed the same
post-processing (ascending sort, phase normalisation), so callers get
deterministic eigenvectors whichever backend runs.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NumericError, ValidationError
from .rng import as_generator, standard_complex_normal

HERMITIAN_TOL = 1e-8
UNIT_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

DEFAULT_METHOD = "lapack"


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns, orthonormal, same order


def as_hermitian(Q, tol=HERMITIAN_TOL) -> np.ndarray:
    """Validate a square Hermitian matrix and return it as complex128."""
    Q = np.asarray(Q, dtype=complex)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise ValidationError("matrix has non-finite entries")
    asym = np.max(np.abs(Q - Q.conj().T))
    if asym > tol:
        raise ValidationError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    return Q


def normalize_phase(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its first largest-modulus entry is real and >= 0."""
    V = np.array(V, dtype=complex, copy=True)
    if V.ndim == 1:
        return normalize_phase(V[:, None])[:, 0]
    idx = np.argmax(np.abs(V), axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    mags = np.abs(pivots)
    phases = np.where(mags > 0, pivots.conj() / np.where(mags > 0, mags, 1.0), 1.0)
    V *= phases[None, :]
    # Clean the imaginary round-off left on the pivot itself.
    V[idx, np.arange(V.shape[1])] = np.abs(V[idx, np.arange(V.shape[1])])
    return V


def _jacobi_rotate(A, V, p, q):
    apq = A[p, q]
    r = abs(apq)
    phase = apq / r
    app = A[p, p].real
    aqq = A[q, q].real
    theta = (aqq - app) / (2.0 * r)
    t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on columns (p, q).
    G = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
    cols = [p, q]
    A[:, cols] = A[:, cols] @ G
    A[cols, :] = G.conj().T @ A[cols, :]
    A[p, q] = 0.0
    A[q, p] = 0.0
    A[p, p] = A[p, p].real
    A[q, q] = A[q, q].real
    V[:, cols] = V[:, cols] @ G


def _off_norm(A):
    return float(np.linalg.norm(A - np.diag(np.diag(A))))


def jacobi_eigh(Q, max_sweeps=JACOBI_MAX_SWEEPS, rel_tol=1e-12):
    """Cyclic Jacobi eigenvalue iteration for a Hermitian matrix.

    Returns unsorted ``(eigenvalues, eigenvectors)``. Stops once the
    off-diagonal Frobenius norm drops below ``rel_tol * ||Q||_F``.
    """
    A = np.array(Q, dtype=complex, copy=True)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    scale = np.linalg.norm(A)
    threshold = rel_tol * scale
    for _ in range(max_sweeps):
        off = _off_norm(A)
        if off <= threshold or scale == 0.0:
            return np.diag(A).real.copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] != 0.0:
                    _jacobi_rotate(A, V, p, q)
    off = _off_norm(A)
    if off <= threshold:
        return np.diag(A).real.copy(), V
    raise NumericError(f"Jacobi iteration did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")


def eigh(Q, method=None) -> EigenDecomposition:
    """Full eigendecomposition, ascending eigenvalues, phase-normalised vectors."""
    Q = as_hermitian(Q)
    method = method or DEFAULT_METHOD
    if method == "jacobi":
        vals, vecs = jacobi_eigh(Q)
    elif method == "lapack":
        try:
            vals, vecs = np.linalg.eigh(Q)
        except np.linalg.LinAlgError as exc:
            raise NumericError(str(exc)) from exc
    else:
        raise ValidationError(f"unknown eigen method {method!r}")
    order = np.argsort(vals, kind="stable")
    return EigenDecomposition(vals[order], normalize_phase(vecs[:, order]))


def max_eigenpair(Q, method=None):
    """Largest eigenvalue and a unit eigenvector.

    Among numerically equal top eigenvalues the lowest-index vector of the
    sorted decomposition is returned, so degenerate inputs stay deterministic.
    """
    vals, vecs = eigh(Q, method)
    top = vals[-1]
    cluster = np.flatnonzero(vals >= top - 1e-12 * max(1.0, abs(top)))
    k = cluster[0]
    return float(top), vecs[:, k]


def min_eigenvalue(Q, method=None) -> float:
    vals, _ = eigh(Q, method)
    return float(vals[0])


def as_unit_vector(w, tol=UNIT_TOL) -> np.ndarray:
    w = np.asarray(w, dtype=complex).ravel()
    if w.size == 0:
        raise ValidationError("vector must have length >= 1")
    err = abs(np.vdot(w, w).real - 1.0)
    if err > tol:
        raise ValidationError(f"vector is not unit-norm (| ||w||^2 - 1 | = {err:.3e})")
    return w


def rayleigh(Q, w) -> float:
    """w^H Q w for unit ``w``."""
    Q = as_hermitian(Q)
    w = as_unit_vector(w)
    if w.size != Q.shape[0]:
        raise ValidationError(f"dimension mismatch: matrix {Q.shape}, vector {w.size}")
    return float(np.vdot(w, Q @ w).real)


def quad_forms(A_stack, W) -> np.ndarray:
    """Real quadratic forms w^H A_i w for a stack of matrices and vectors.

    ``A_stack`` has shape (N, M, M); ``W`` is (M,) or (K, M). Returns (N,) or (K, N).
    """
    A_stack = np.asarray(A_stack)
    W = np.asarray(W)
    N, M = A_stack.shape[:2]
    single = W.ndim == 1
    W2 = W[None, :] if single else W
    AW = (W2 @ A_stack.reshape(N * M, M).T).reshape(len(W2), N, M)
    out = np.einsum("km,kim->ki", W2.conj(), AW).real
    return out[0] if single else out


def is_psd(Q, tol=1e-10) -> bool:
    return min_eigenvalue(Q) >= -tol


def psd_sqrt(Q, clamp=1e-12) -> np.ndarray:
    """Hermitian square root of a PSD matrix.

    Eigenvalues in [-clamp, 0) are treated as round-off and set to zero;
    anything more negative is rejected.
    """
    vals, vecs = eigh(Q)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if vals[0] < -clamp * scale:
        raise ValidationError(f"matrix is not positive semidefinite (lambda_min = {vals[0]:.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def sample_unit_sphere(M, stream, size=None) -> np.ndarray:
    """Uniform draw(s) from the complex unit sphere in C^M.

    ``stream`` may be a RandomStream, a numpy Generator, or an int seed.
    With ``size`` given, returns an array of shape (size, M).
    """
    if int(M) < 1:
        raise ValidationError(f"dimension must be >= 1, got {M}")
    rng = as_generator(stream)
    shape = (int(M),) if size is None else (int(size), int(M))
    z = standard_complex_normal(rng, shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)
