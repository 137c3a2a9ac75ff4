"""Entropies and coherence measures in bits.

The roof quantities (coherence of assistance / formation, entanglement of
assistance) live in :mod:`coherence_lab.roof`; this module holds the
closed-form measures they are compared against.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ContractViolation
from .linalg import hermitian_eig
from .states import DensityMatrix, as_density, dephase, partial_trace, trace_distance

CLIP_TOL = 1e-10
SUPPORT_TOL = 1e-12
INCOHERENT_TOL = 1e-10


class _Infinite:
    """Divergent relative entropy.

    A singleton that compares greater than every real number and refuses
    arithmetic, so a divergence cannot silently propagate as ``inf``.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __float__(self):
        raise TypeError("INFINITE relative entropy has no float value")


INFINITE = _Infinite()


def _clip_spectrum(ev: np.ndarray) -> np.ndarray:
    lowest = float(np.min(ev)) if ev.size else 0.0
    if lowest < -CLIP_TOL:
        raise ContractViolation(f"eigenvalue {lowest:.3e} is below the PSD floor")
    return np.clip(ev, 0.0, None)


def shannon_entropy(p) -> float:
    """Shannon entropy in bits with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(max(-np.sum(nz * np.log2(nz)), 0.0))


def binary_entropy(x: float) -> float:
    """``h(x) = -x log2 x - (1-x) log2 (1-x)``."""
    if not 0.0 <= x <= 1.0:
        raise ContractViolation(f"binary entropy needs 0 <= x <= 1, got {x}")
    return shannon_entropy([x, 1.0 - x])


def von_neumann_entropy(rho) -> float:
    rho = as_density(rho)
    ev = _clip_spectrum(hermitian_eig(rho.mat, vectors=False).eigenvalues)
    return shannon_entropy(ev)


def relative_entropy(rho, sigma):
    """``S(rho || sigma) = -Tr(rho log sigma) - S(rho)`` in bits.

    Returns :data:`INFINITE` when the support of ``rho`` is not contained in
    the support of ``sigma`` (an eigenvector of ``sigma`` with eigenvalue
    below ``1e-12`` carries weight of ``rho`` above that threshold).
    """
    rho = as_density(rho)
    sigma = as_density(sigma)
    if rho.dims != sigma.dims:
        raise ContractViolation(f"dimension mismatch: {rho.dims} vs {sigma.dims}")
    spec = hermitian_eig(sigma.mat)
    lam = _clip_spectrum(spec.eigenvalues)
    v = spec.eigenvectors
    weights = np.real(np.einsum("ik,ij,jk->k", v.conj(), rho.mat, v))
    outside = lam < SUPPORT_TOL
    if np.any(weights[outside] > SUPPORT_TOL):
        return INFINITE
    inside = ~outside
    cross = -float(np.sum(weights[inside] * np.log2(lam[inside])))
    return max(cross - von_neumann_entropy(rho), 0.0)


def off_diagonal_mass(rho) -> float:
    """Largest magnitude among the off-diagonal entries."""
    rho = as_density(rho)
    off = rho.mat - np.diag(np.diag(rho.mat))
    return float(np.max(np.abs(off))) if off.size else 0.0


def relative_entropy_of_coherence(rho) -> float:
    """``C_r = S(Delta(rho)) - S(rho)``, dephasing every subsystem.

    Exactly 0 for states whose off-diagonal entries are all below 1e-10.
    """
    rho = as_density(rho)
    if off_diagonal_mass(rho) < INCOHERENT_TOL:
        return 0.0
    diag = _clip_spectrum(np.real(np.diag(rho.mat)))
    return max(shannon_entropy(diag) - von_neumann_entropy(rho), 0.0)


def _check_bipartite(rho: DensityMatrix, b_slot: int) -> None:
    if rho.n_subsystems != 2:
        raise ContractViolation(f"expected a bipartite state, got dims {rho.dims}")
    if b_slot not in (0, 1):
        raise ContractViolation(f"b_slot must be 0 or 1, got {b_slot}")


def qi_defect(rho, b_slot: int = 1) -> float:
    """Largest entry of ``rho`` erased by dephasing subsystem ``b_slot``."""
    rho = as_density(rho)
    _check_bipartite(rho, b_slot)
    return float(np.max(np.abs(rho.mat - dephase(rho, [b_slot]).mat)))


def qi_relative_entropy(rho, b_slot: int = 1) -> float:
    """Quantum-incoherent relative entropy ``S(Delta^B(rho)) - S(rho)``.

    This is the relative-entropy distance to the closest quantum-incoherent
    state; exactly 0 when ``rho`` is quantum-incoherent within 1e-10.
    """
    rho = as_density(rho)
    _check_bipartite(rho, b_slot)
    if qi_defect(rho, b_slot) < INCOHERENT_TOL:
        return 0.0
    return max(von_neumann_entropy(dephase(rho, [b_slot])) - von_neumann_entropy(rho), 0.0)


def regularized_coa(rho) -> float:
    """Asymptotic coherence of assistance, ``S(Delta(rho))``."""
    rho = as_density(rho)
    return shannon_entropy(_clip_spectrum(np.real(np.diag(rho.mat))))


def regularized_eoa(rho) -> float:
    """Asymptotic entanglement of assistance, ``min(S(rho_B), S(rho_C))``."""
    rho = as_density(rho)
    _check_bipartite(rho, 1)
    return min(
        von_neumann_entropy(partial_trace(rho, [0])),
        von_neumann_entropy(partial_trace(rho, [1])),
    )


def assistance_gain(rho_b) -> float:
    """Largest gain in distillable coherence from a collaborating party.

    Over all extensions of ``rho_b`` the gain is maximized by a
    purification and equals the von Neumann entropy ``S(rho_b)``.
    """
    return von_neumann_entropy(rho_b)


class ContinuityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool
    trace_distance: float
    in_regime: bool


def continuity_gap_check(rho, sigma, b_slot: int = 1) -> ContinuityCheck:
    """Compare ``|C_r^{A|B}(rho) - C_r^{A|B}(sigma)|`` with ``2T log2 d + 2h(T)``.

    ``in_regime`` is False when the trace distance exceeds 1/2, outside
    the range where the bound is claimed; the comparison is still made.
    """
    rho = as_density(rho)
    sigma = as_density(sigma)
    if rho.dims != sigma.dims:
        raise ContractViolation(f"dimension mismatch: {rho.dims} vs {sigma.dims}")
    t = trace_distance(rho, sigma)
    lhs = abs(qi_relative_entropy(rho, b_slot) - qi_relative_entropy(sigma, b_slot))
    rhs = 2 * t * np.log2(rho.dim) + 2 * binary_entropy(t)
    return ContinuityCheck(lhs, float(rhs), bool(lhs <= rhs + 1e-9), t, t <= 0.5)
