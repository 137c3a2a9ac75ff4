"""Seeded random states, isometries and channels.

All randomness comes from numpy's Philox counter-based bit generator, so a
seed fully determines every sample.
"""

from __future__ import annotations

from math import prod
from typing import Sequence

import numpy as np

from .errors import ContractViolation
from .states import DensityMatrix, PureState

DEFAULT_SEED = 3405691582


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) % 2**64))


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_isometry(rng: np.random.Generator, m: int, r: int) -> np.ndarray:
    """Haar-distributed ``m x r`` isometry (orthonormal columns)."""
    if r > m:
        raise ContractViolation(f"isometry needs m >= r, got m={m}, r={r}")
    q, upper = np.linalg.qr(ginibre(rng, m, r))
    # fix the column phases so the distribution is exactly Haar
    phases = np.diag(upper) / np.abs(np.diag(upper))
    return q * phases.conj()


def haar_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    return haar_isometry(rng, d, d)


def random_pure_state(rng: np.random.Generator, dims: Sequence[int]) -> PureState:
    d = prod(dims)
    return PureState.normalized(ginibre(rng, d, 1)[:, 0], dims)


def random_density_matrix(
    rng: np.random.Generator, dims: Sequence[int], rank: int | None = None
) -> DensityMatrix:
    """Rank-``rank`` state from the partial trace of a Haar pure state on dims x rank."""
    d = prod(dims)
    rank = d if rank is None else int(rank)
    if not 1 <= rank <= d:
        raise ContractViolation(f"rank must lie in [1, {d}], got {rank}")
    g = ginibre(rng, d, rank)
    mat = g @ g.conj().T
    return DensityMatrix._trusted(dims, mat / np.trace(mat).real)


def random_incoherent_kraus(
    rng: np.random.Generator, d: int, n_maps: int = 2, injective: bool | None = None
) -> list[np.ndarray]:
    """Random complete set of incoherent Kraus operators on a ``d``-level system.

    ``n_maps`` index maps ``f_b`` are drawn.  With ``injective=True`` every
    map is a permutation and carries one operator; column weights are
    normalized across operators.  Otherwise each map carries ``d``
    operators whose weights are the rows of ``U_b @ diag(s_b)`` with ``U_b``
    Haar unitary and ``sum_b s_b**2 = 1`` columnwise, which makes the set
    complete however the maps collide.  ``injective=False`` forces a
    collision in every map (needs ``d >= 2``).
    """
    if injective:
        weights = ginibre(rng, n_maps, d)
        weights /= np.linalg.norm(weights, axis=0, keepdims=True)
        ops = []
        for b in range(n_maps):
            k = np.zeros((d, d), dtype=complex)
            k[rng.permutation(d), np.arange(d)] = weights[b]
            ops.append(k)
        return ops

    scales = np.abs(rng.standard_normal((n_maps, d))) + 0.1
    scales /= np.linalg.norm(scales, axis=0, keepdims=True)
    ops = []
    for b in range(n_maps):
        f = rng.integers(0, d, size=d)
        if injective is False and d >= 2 and len(set(f.tolist())) == d:
            f[1] = f[0]
        u = haar_unitary(rng, d) * scales[b]
        for row in u:
            k = np.zeros((d, d), dtype=complex)
            k[f, np.arange(d)] = row
            ops.append(k)
    return ops
