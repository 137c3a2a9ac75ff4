"""Dense Hermitian eigendecomposition by cyclic complex Jacobi rotations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

HERMITIAN_TOL = 1e-8
OFFDIAG_TOL = 1e-14
MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues in descending order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _check_square_hermitian(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractViolation("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    asym = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if asym > HERMITIAN_TOL * scale:
        raise ContractViolation(f"matrix is not Hermitian (max |A - A^H| = {asym:.3e})")


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def hermitian_eig(a, vectors: bool = True) -> Spectrum:
    """Diagonalize a Hermitian matrix with cyclic Jacobi sweeps.

    Each sweep visits every pair ``(p, q)`` with ``p < q`` and applies the
    unitary ``diag(1, conj(e)) @ [[c, s], [-s, c]]`` that annihilates the
    ``(p, q)`` entry, where ``e`` is the phase of that entry.  Iteration
    stops once the off-diagonal Frobenius norm falls below ``1e-14`` times
    the Frobenius norm of the input, or after 100 sweeps.

    Args:
        a: square complex (or real) Hermitian matrix.
        vectors: accumulate eigenvectors. Skipping them roughly halves
            the work when only the spectrum is needed.

    Returns:
        Spectrum with eigenvalues sorted in descending order.

    Raises:
        ContractViolation: if ``a`` is not square, not finite or not
            Hermitian within ``1e-8``.
    """
    a = np.array(a, dtype=complex)
    _check_square_hermitian(a)
    n = a.shape[0]
    work = (a + a.conj().T) / 2
    v = np.eye(n, dtype=complex) if vectors else None

    scale = float(np.linalg.norm(work))
    threshold = OFFDIAG_TOL * scale
    # entries this small cannot move the diagonal in double precision
    negligible = 1e-300 + 1e-18 * scale

    for _ in range(MAX_SWEEPS):
        if _off_norm(work) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                r = abs(apq)
                if r <= negligible:
                    continue
                e = apq / r
                app = work[p, p].real
                aqq = work[q, q].real
                tau = (aqq - app) / (2.0 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g = np.array([[c, s], [-s * e.conjugate(), c * e.conjugate()]])
                idx = [p, q]
                work[:, idx] = work[:, idx] @ g
                work[idx, :] = g.conj().T @ work[idx, :]
                work[p, q] = 0.0
                work[q, p] = 0.0
                work[p, p] = work[p, p].real
                work[q, q] = work[q, q].real
                if v is not None:
                    v[:, idx] = v[:, idx] @ g

    eigenvalues = np.real(np.diag(work)).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    if v is not None:
        v = v[:, order]
    return Spectrum(eigenvalues=eigenvalues, eigenvectors=v)


def eigvalsh(a) -> np.ndarray:
    """Descending eigenvalues of a Hermitian matrix."""
    return hermitian_eig(a, vectors=False).eigenvalues
