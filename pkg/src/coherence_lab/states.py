"""State containers and the tensor / partial-trace calculus.

Subsystems are ordered row-major: the first entry of ``dims`` is the
slowest-varying index of the composite basis.  The incoherent reference
basis of every subsystem is its computational basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, InvariantViolation
from .linalg import hermitian_eig

STATE_TOL = 1e-10
SUPPORT_TOL = 1e-12


def _normalize_dims(dims, size: int) -> tuple[int, ...]:
    try:
        dims = tuple(int(d) for d in dims)
    except TypeError as exc:
        raise InvariantViolation("dims", "dims must be a sequence of integers") from exc
    if not dims or any(d < 1 for d in dims):
        raise InvariantViolation("dims", f"every subsystem dimension must be >= 1, got {dims}")
    if prod(dims) != size:
        raise InvariantViolation("dims", f"product of dims {dims} does not match size {size}")
    return dims


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix with subsystem dims.

    Construction validates every invariant; the stored matrix is an
    exactly Hermitian, read-only copy.
    """

    dims: tuple[int, ...]
    mat: np.ndarray

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvariantViolation("shape", f"density matrix must be square, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise InvariantViolation("finite", "density matrix has non-finite entries")
        dims = _normalize_dims(self.dims, mat.shape[0])
        asym = float(np.max(np.abs(mat - mat.conj().T)))
        if asym > STATE_TOL:
            raise InvariantViolation("hermitian", f"max |rho - rho^H| = {asym:.3e}")
        mat = (mat + mat.conj().T) / 2
        tr = float(np.trace(mat).real)
        if abs(tr - 1.0) > STATE_TOL:
            raise InvariantViolation("trace", f"trace is {tr!r}, expected 1")
        lowest = float(hermitian_eig(mat, vectors=False).eigenvalues[-1])
        if lowest < -STATE_TOL:
            raise InvariantViolation("psd", f"smallest eigenvalue {lowest:.3e} is negative")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", _frozen(mat))

    @classmethod
    def _trusted(cls, dims: Sequence[int], mat: np.ndarray) -> "DensityMatrix":
        # results of operations on already-valid states skip re-validation
        obj = object.__new__(cls)
        mat = np.asarray(mat, dtype=complex)
        object.__setattr__(obj, "dims", tuple(int(d) for d in dims))
        object.__setattr__(obj, "mat", _frozen((mat + mat.conj().T) / 2))
        return obj

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector with subsystem dims."""

    dims: tuple[int, ...]
    vec: np.ndarray

    def __post_init__(self):
        vec = np.array(self.vec, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(vec)):
            raise InvariantViolation("finite", "state vector has non-finite entries")
        dims = _normalize_dims(self.dims, vec.size)
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > STATE_TOL:
            raise InvariantViolation("norm", f"state vector norm is {norm!r}, expected 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "vec", _frozen(vec))

    @classmethod
    def _trusted(cls, dims: Sequence[int], vec: np.ndarray) -> "PureState":
        obj = object.__new__(cls)
        object.__setattr__(obj, "dims", tuple(int(d) for d in dims))
        object.__setattr__(obj, "vec", _frozen(np.asarray(vec).reshape(-1)))
        return obj

    @classmethod
    def normalized(cls, vec, dims: Sequence[int] | None = None) -> "PureState":
        """Normalize ``vec`` and wrap it. ``dims`` defaults to a single system."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if not np.isfinite(norm) or norm == 0:
            raise ContractViolation("cannot normalize a zero or non-finite vector")
        return cls(dims if dims is not None else (vec.size,), vec / norm)

    def density(self) -> DensityMatrix:
        return DensityMatrix._trusted(self.dims, np.outer(self.vec, self.vec.conj()))

    def __repr__(self) -> str:
        return f"PureState(dims={self.dims})"


def as_density(state) -> DensityMatrix:
    """Accept a DensityMatrix or PureState and return a DensityMatrix."""
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.density()
    raise ContractViolation(f"expected DensityMatrix or PureState, got {type(state).__name__}")


def basis_state(index: int | Sequence[int], dims: Sequence[int]) -> PureState:
    """Computational basis ket; ``index`` is a flat index or one digit per subsystem."""
    dims = tuple(dims)
    flat = int(np.ravel_multi_index(tuple(index), dims)) if not isinstance(index, (int, np.integer)) else int(index)
    vec = np.zeros(prod(dims), dtype=complex)
    vec[flat] = 1.0
    return PureState(dims, vec)


def maximally_coherent(d: int) -> PureState:
    """Uniform superposition of the ``d`` incoherent basis states."""
    return PureState((d,), np.full(d, 1 / np.sqrt(d), dtype=complex))


def maximally_mixed(dims: Sequence[int]) -> DensityMatrix:
    d = prod(dims)
    return DensityMatrix._trusted(dims, np.eye(d, dtype=complex) / d)


def tensor(*states) -> DensityMatrix | PureState:
    """Kronecker product; subsystem order follows argument order.

    If every argument is a PureState the result is a PureState, otherwise a
    DensityMatrix.
    """
    if not states:
        raise ContractViolation("tensor needs at least one state")
    if all(isinstance(s, PureState) for s in states):
        vec = states[0].vec
        dims = list(states[0].dims)
        for s in states[1:]:
            vec = np.kron(vec, s.vec)
            dims.extend(s.dims)
        return PureState._trusted(dims, vec)
    mats = [as_density(s) for s in states]
    mat = mats[0].mat
    dims = list(mats[0].dims)
    for s in mats[1:]:
        mat = np.kron(mat, s.mat)
        dims.extend(s.dims)
    return DensityMatrix._trusted(dims, mat)


def _check_indices(indices: Iterable[int], n: int, what: str) -> list[int]:
    out = sorted(set(int(i) for i in indices))
    for i in out:
        if not 0 <= i < n:
            raise ContractViolation(f"{what} index {i} out of range for {n} subsystems")
    return out


def partial_trace(rho, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every subsystem not in ``keep``.

    Kept subsystems stay in their original relative order.

    Raises:
        ContractViolation: if ``keep`` is empty or has out-of-range indices.
    """
    rho = as_density(rho)
    n = rho.n_subsystems
    keep = _check_indices(keep, n, "keep")
    if not keep:
        raise ContractViolation("keep must be non-empty; use numpy.trace for the full trace")
    gone = [i for i in range(n) if i not in keep]
    dims = rho.dims
    t = rho.mat.reshape(dims + dims)
    perm = keep + gone
    t = t.transpose(perm + [n + i for i in perm])
    dk = prod(dims[i] for i in keep)
    dg = prod(dims[i] for i in gone)
    t = t.reshape(dk, dg, dk, dg)
    out = np.einsum("ajbj->ab", t)
    return DensityMatrix._trusted([dims[i] for i in keep], out)


def permute_subsystems(state, order: Sequence[int]):
    """Reorder subsystems so that new subsystem ``k`` is old subsystem ``order[k]``."""
    order = [int(i) for i in order]
    if isinstance(state, PureState):
        n = len(state.dims)
        if sorted(order) != list(range(n)):
            raise ContractViolation(f"{order} is not a permutation of {n} subsystems")
        t = state.vec.reshape(state.dims).transpose(order)
        return PureState._trusted([state.dims[i] for i in order], t.reshape(-1))
    rho = as_density(state)
    n = rho.n_subsystems
    if sorted(order) != list(range(n)):
        raise ContractViolation(f"{order} is not a permutation of {n} subsystems")
    d = rho.dims
    t = rho.mat.reshape(d + d).transpose(order + [n + i for i in order])
    return DensityMatrix._trusted([d[i] for i in order], t.reshape(rho.dim, rho.dim))


def _digit_mask(dims: Sequence[int], subsystems: Sequence[int]) -> np.ndarray:
    total = prod(dims)
    digits = np.array(np.unravel_index(np.arange(total), dims))
    mask = np.ones((total, total), dtype=bool)
    for s in subsystems:
        mask &= digits[s][:, None] == digits[s][None, :]
    return mask


def dephase(rho, subsystems: Iterable[int] | None = None) -> DensityMatrix:
    """Erase coherences on the given subsystems (all of them by default).

    Matrix elements whose row and column indices differ on any dephased
    subsystem are set to exactly zero.
    """
    rho = as_density(rho)
    subs = range(rho.n_subsystems) if subsystems is None else subsystems
    subs = _check_indices(subs, rho.n_subsystems, "dephased subsystem")
    out = np.where(_digit_mask(rho.dims, subs), rho.mat, 0.0)
    return DensityMatrix._trusted(rho.dims, out)


def purify(rho) -> PureState:
    """Canonical purification ``sum_k sqrt(l_k) |k>|v_k>`` with the ancilla first.

    The ancilla has dimension ``rank(rho)`` (eigenvalues above ``1e-12``)
    and its basis labels the eigenvectors in descending eigenvalue order.
    """
    rho = as_density(rho)
    spec = hermitian_eig(rho.mat)
    keep = spec.eigenvalues > SUPPORT_TOL
    lam = spec.eigenvalues[keep]
    vecs = spec.eigenvectors[:, keep]
    # row k of the (rank, d) amplitude array is sqrt(l_k) v_k
    amp = np.sqrt(lam)[:, None] * vecs.T
    amp /= np.linalg.norm(amp)
    dims = (int(lam.size), rho.dim)
    return PureState._trusted(dims, amp.reshape(-1))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    rho = as_density(rho)
    sigma = as_density(sigma)
    if rho.dims != sigma.dims:
        raise ContractViolation(f"dimension mismatch: {rho.dims} vs {sigma.dims}")
    ev = hermitian_eig(rho.mat - sigma.mat, vectors=False).eigenvalues
    return float(min(max(0.5 * np.sum(np.abs(ev)), 0.0), 1.0))
