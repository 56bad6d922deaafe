"""Dense symmetric linear algebra for small matrices, plus algebraic sanity oracles.

The eigensolver is a cyclic Jacobi iteration. It is deliberately independent of
LAPACK so the rest of the package (and the test suite) can cross-check the two
routes against each other. Matrices are plain numpy arrays kept exactly
symmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import NotPSDError, NumericalError, PreconditionError

MAX_DIM = 64


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return the symmetric part (a + a.T) / 2 as a new array."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2.0


def require_symmetric(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if float(np.abs(a - a.T).max(initial=0.0)) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return symmetrize(a)


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition A = Q diag(e) Q^T with e ascending and Q orthonormal."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eigh(a: np.ndarray, max_sweeps: int = 100) -> Spectrum:
    """Eigendecomposition of a small dense symmetric matrix by cyclic Jacobi rotations.

    Sweeps are capped at ``max_sweeps``; rotations below the working threshold
    are skipped. Raises NumericalError if the off-diagonal mass has not been
    annihilated when the cap is reached.
    """
    work = require_symmetric(a).copy()
    n = work.shape[0]
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds desk-scale cap {MAX_DIM}")
    if n == 1:
        return Spectrum(work[0].copy(), np.eye(1))

    v = np.eye(n)
    scale = max(1.0, float(np.abs(work).max()))
    stop = 1e-14 * scale
    converged = False
    for _ in range(max_sweeps):
        off = float(np.abs(np.triu(work, 1)).max())
        if off <= stop:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= stop:
                    continue
                app = work[p, p]
                aqq = work[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c

                cp = work[:, p].copy()
                cq = work[:, q].copy()
                work[:, p] = c * cp - s * cq
                work[:, q] = s * cp + c * cq
                rp = work[p, :].copy()
                rq = work[q, :].copy()
                work[p, :] = c * rp - s * rq
                work[q, :] = s * rp + c * rq
                # closed forms for the rotated 2x2 block keep the zeros exact
                work[p, p] = app - t * apq
                work[q, q] = aqq + t * apq
                work[p, q] = 0.0
                work[q, p] = 0.0
                work[:, p] = work[p, :]
                work[:, q] = work[q, :]

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if not converged:
        off = float(np.abs(np.triu(work, 1)).max())
        if off > stop:
            raise NumericalError(
                f"Jacobi sweep cap {max_sweeps} reached with off-diagonal {off:.3e}"
            )
    e = np.diag(work).copy()
    order = np.argsort(e, kind="stable")
    return Spectrum(e[order], v[:, order])


def sqrt_psd(a: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-1e-6, 0) are treated as roundoff and clamped to zero,
    and positive ones at roundoff scale are snapped to zero too (the square
    root would otherwise amplify an O(eps) eigenvalue error to O(sqrt(eps)),
    spoiling exact cases like projections). Anything below -1e-6 raises
    NotPSDError.
    """
    spec = eigh(a)
    e = spec.eigenvalues
    if float(e.min()) < -1e-6:
        raise NotPSDError(f"matrix has eigenvalue {e.min():.3e} < -1e-6")
    scale = max(1.0, float(np.abs(e).max(initial=0.0)))
    e = np.where(np.abs(e) <= 1e-12 * scale, 0.0, np.clip(e, 0.0, None))
    root = np.sqrt(e)
    q = spec.eigenvectors
    return symmetrize((q * root) @ q.T)


@dataclass(frozen=True)
class SpectraMatchReport:
    """Spectra of sigma sigma^T and sigma^T sigma with their nonzero-part comparison."""

    horizontal_eigenvalues: np.ndarray
    full_eigenvalues: np.ndarray
    zeros_appended: int
    max_mismatch: float
    matched: bool


def spectra_match_lemma(sigma: np.ndarray, tol: float = 1e-8) -> SpectraMatchReport:
    """Check that sigma sigma^T is strictly positive and shares its spectrum with
    sigma^T sigma up to n - m appended zeros.

    Requires full row rank (smallest singular value > 1e-10).
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2:
        raise ValueError("sigma must be a matrix")
    m, n = sigma.shape
    if m > n:
        raise ValueError(f"expected m <= n, got shape {sigma.shape}")
    gram_h = symmetrize(sigma @ sigma.T)
    eh = eigh(gram_h).eigenvalues
    smallest_sv = sqrt(max(float(eh.min()), 0.0))
    if smallest_sv <= 1e-10:
        raise PreconditionError(
            f"sigma is rank deficient (smallest singular value {smallest_sv:.3e})"
        )
    gram_f = symmetrize(sigma.T @ sigma)
    ef = eigh(gram_f).eigenvalues
    expected = np.sort(np.concatenate([np.zeros(n - m), eh]))
    max_mismatch = float(np.abs(np.sort(ef) - expected).max())
    matched = max_mismatch <= tol and float(eh.min()) > 0.0
    return SpectraMatchReport(eh, ef, n - m, max_mismatch, matched)


def trace_identity_check(
    sigma1: np.ndarray, sigma2: np.ndarray, a: np.ndarray, b: np.ndarray
) -> float:
    """|Tr(s1^T s1 A - s2^T s2 B) - Tr(s1 A s1^T - s2 B s2^T)|, which should vanish."""
    sigma1 = np.asarray(sigma1, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    a = require_symmetric(a)
    b = require_symmetric(b)
    if sigma1.shape != sigma2.shape:
        raise ValueError("sigma1 and sigma2 must have the same shape")
    m, n = sigma1.shape
    if a.shape != (n, n) or b.shape != (n, n):
        raise ValueError("A, B must be n x n for m x n sigma factors")
    lhs = np.trace(sigma1.T @ sigma1 @ a - sigma2.T @ sigma2 @ b)
    rhs = np.trace(sigma1 @ a @ sigma1.T - sigma2 @ b @ sigma2.T)
    return abs(float(lhs - rhs))


def matrix_to_json(a: np.ndarray) -> dict:
    """Row-major JSON payload for a symmetric matrix: {"dim": n, "entries": [...]}."""
    a = require_symmetric(a)
    return {"dim": int(a.shape[0]), "entries": [float(v) for v in a.ravel()]}


def matrix_from_json(payload: dict) -> np.ndarray:
    dim = int(payload["dim"])
    entries = np.asarray(payload["entries"], dtype=float)
    if entries.size != dim * dim:
        raise ValueError(f"expected {dim * dim} entries, got {entries.size}")
    return require_symmetric(entries.reshape(dim, dim))


@dataclass(frozen=True)
class DiagonalCounterexample:
    """A symmetric matrix with strictly positive diagonal but a negative eigenvalue."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    min_eigenvalue: float


def diagonal_lemma_falsifier() -> DiagonalCounterexample:
    """Produce a witness showing a positive diagonal does not force positive eigenvalues."""
    m = np.array([[1.0, 3.0], [3.0, 1.0]])
    e = eigh(m).eigenvalues
    return DiagonalCounterexample(m, e, float(e.min()))
