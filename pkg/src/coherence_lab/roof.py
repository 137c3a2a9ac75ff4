"""Concave and convex roofs over pure-state decompositions.

Every decomposition of a rank-``r`` state ``rho = sum_k l_k |v_k><v_k|``
into ``m`` pure states has the form ``|psi_i~> = sum_k V_ik sqrt(l_k) |v_k>``
for an ``m x r`` isometry ``V``.  The optimizer searches over ``V`` with
Jacobi-style sweeps of two-row Givens rotations: for each row pair it
optimizes a real rotation and then an imaginary rotation, each by a
64-point angle grid followed by golden-section refinement.  Multiple
Haar-random starts run in lockstep as one batch; restart ``k`` draws its
start from seed ``config.seed + k`` and is frozen once converged, so the
batch gives the same per-restart results as running restarts one by one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log, prod
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolation
from .linalg import hermitian_eig
from .sampling import haar_isometry, rng_from_seed
from .states import DensityMatrix, PureState, as_density

# f(vectors) -> values; vectors has shape (..., d) and unit norm on the last axis
PureFunctional = Callable[[np.ndarray], np.ndarray]

SUPPORT_TOL = 1e-12
_TINY_NORM = 1e-28
_GOLDEN = (1 + 5**0.5) / 2


@dataclass(frozen=True)
class RoofConfig:
    """Optimizer settings.

    ``ensemble_cap`` defaults to ``rank**2`` members.  A restart stops once
    a full sweep improves its value by less than ``tol``.
    """

    restarts: int = 32
    ensemble_cap: int | None = None
    tol: float = 1e-9
    seed: int = 0
    max_sweeps: int = 200
    grid: int = 64
    refine_tol: float = 1e-8

    def __post_init__(self):
        if self.restarts < 1:
            raise ContractViolation("restarts must be >= 1")
        if self.ensemble_cap is not None and self.ensemble_cap < 1:
            raise ContractViolation("ensemble_cap must be >= 1")
        if self.grid < 3:
            raise ContractViolation("grid needs at least 3 points")


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Finite pure-state decomposition ``sum_i q_i |psi_i><psi_i|``."""

    members: tuple[tuple[float, PureState], ...]
    source_dims: tuple[int, ...]

    def __post_init__(self):
        total = sum(q for q, _ in self.members)
        if abs(total - 1.0) > 1e-10:
            raise ContractViolation(f"ensemble probabilities sum to {total}, expected 1")
        if any(not 0.0 < q <= 1.0 + 1e-12 for q, _ in self.members):
            raise ContractViolation("ensemble probabilities must lie in (0, 1]")

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([q for q, _ in self.members])

    def density(self) -> DensityMatrix:
        mat = sum(q * np.outer(s.vec, s.vec.conj()) for q, s in self.members)
        return DensityMatrix._trusted(self.source_dims, mat)

    def realizes(self, rho, tol: float = 1e-8) -> bool:
        rho = as_density(rho)
        return bool(np.max(np.abs(self.density().mat - rho.mat)) <= tol)

    def average(self, functional: PureFunctional) -> float:
        vecs = np.array([s.vec for _, s in self.members])
        return float(np.dot(self.probabilities, functional(vecs)))

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True, eq=False)
class RoofResult:
    value: float
    ensemble: Ensemble
    restarts_used: int
    converged: bool
    best_history: tuple[float, ...]
    direction: str
    sweeps: int = 0
    from_eigendecomposition: bool = False
    restart_converged: tuple[bool, ...] = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# pure-state functionals


def _xlog2x(p: np.ndarray) -> np.ndarray:
    return p * np.log2(p + (p == 0))


def diagonal_entropy(vecs: np.ndarray) -> np.ndarray:
    """``S(Delta(psi))`` in bits: Shannon entropy of ``|<i|psi>|^2``."""
    p = vecs.real**2 + vecs.imag**2
    return np.maximum(-_xlog2x(p).sum(axis=-1), 0.0)


def _diagonal_statistic(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (x * y.conj()).real


def _diagonal_entropy_weighted(p: np.ndarray) -> np.ndarray:
    # ||x||^2 H(|x_i|^2 / ||x||^2) = -sum p log p + w log w, no normalization needed
    p = np.maximum(p, 0.0)
    w = p.sum(axis=-1)
    return np.maximum(_xlog2x(w) - _xlog2x(p).sum(axis=-1), 0.0)


# A functional may expose a symmetrized sesquilinear statistic
# ``statistic(x, y)`` (with ``statistic(x, x)`` determining ``f``) and the
# weighted value ``||x||^2 f(x/||x||)`` as a function of the unnormalized
# statistic.  The optimizer then scores rotations without rebuilding vectors.
diagonal_entropy.statistic = _diagonal_statistic
diagonal_entropy.weighted_from_statistic = _diagonal_entropy_weighted


def entanglement_entropy(dims: Sequence[int]) -> PureFunctional:
    """Entropy of entanglement across a bipartition ``dims = (d_B, d_C)``.

    The reduced spectrum is taken on the smaller factor.  This functional
    sits in the optimizer's inner loop and evaluates whole batches, so it
    uses LAPACK's batched ``eigvalsh``.
    """
    d_b, d_c = (int(d) for d in dims)

    def as_matrices(x):
        m = x.reshape(x.shape[:-1] + (d_b, d_c))
        return m if d_b <= d_c else np.swapaxes(m, -1, -2)

    def statistic(x, y):
        # (X Y^H + Y X^H) / 2 on the smaller factor
        mx, my = as_matrices(x), as_matrices(y)
        g = mx @ np.swapaxes(my.conj(), -1, -2)
        return (g + np.swapaxes(g.conj(), -1, -2)) / 2

    def weighted(gram):
        ev = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
        w = ev.sum(axis=-1)
        return np.maximum(_xlog2x(w) - _xlog2x(ev).sum(axis=-1), 0.0)

    def functional(vecs: np.ndarray) -> np.ndarray:
        return weighted(statistic(vecs, vecs))

    functional.statistic = statistic
    functional.weighted_from_statistic = weighted
    return functional


def _weighted(functional: PureFunctional, x: np.ndarray) -> np.ndarray:
    """``||x||^2 f(x / ||x||)`` over the last axis, 0 for vanishing members."""
    stat = getattr(functional, "statistic", None)
    if stat is not None:
        return functional.weighted_from_statistic(stat(x, x))
    w = np.sum(x.real**2 + x.imag**2, axis=-1)
    safe = np.where(w > _TINY_NORM, w, 1.0)
    vals = functional(x / np.sqrt(safe)[..., None])
    return np.where(w > _TINY_NORM, w * vals, 0.0)


# ---------------------------------------------------------------------------
# optimizer


def _rotate(xp, xq, theta, imaginary: bool):
    c = np.cos(theta)[..., None]
    s = np.sin(theta)[..., None]
    if imaginary:
        return c * xp + 1j * s * xq, 1j * s * xp + c * xq
    return c * xp - s * xq, s * xp + c * xq


def round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rounds of disjoint row pairs covering every pair once (circle method)."""
    players = list(range(m)) + ([-1] if m % 2 else [])
    n = len(players)
    rounds = []
    for _ in range(n - 1):
        pairs = [(players[i], players[n - 1 - i]) for i in range(n // 2)]
        pairs = sorted((min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0)
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _sweep_round(state, ps, qs, imaginary, functional, sign, active, cfg, n_golden):
    """Optimize one rotation generator on the disjoint row pairs ``(ps, qs)``."""
    x, v, contrib = state
    xp, xq = x[:, ps], x[:, qs]  # (R, P, d)
    current = contrib[:, ps] + contrib[:, qs]  # (R, P)

    stat = getattr(functional, "statistic", None)
    if stat is not None:
        # rotated statistics are mean + cos(2t) half_diff - sin(2t) cross (member a)
        # and mean - cos(2t) half_diff + sin(2t) cross (member b)
        from_stat = functional.weighted_from_statistic
        spp, sqq = stat(xp, xp), stat(xq, xq)
        cross = stat(xp, -1j * xq if imaginary else xq)
        # stacked (member a, member b) so that one expression scores both
        mean = np.stack(((spp + sqq) / 2,) * 2, axis=2)[:, :, None]
        half_diff = np.stack(((spp - sqq) / 2, (sqq - spp) / 2), axis=2)[:, :, None]
        cross = np.stack((cross, -cross), axis=2)[:, :, None]
        tail = (None,) * (spp.ndim - 1)

        def score(theta):
            c2 = np.cos(2 * theta)[(...,) + tail]
            s2 = np.sin(2 * theta)[(...,) + tail]
            return sign * from_stat(mean + c2 * half_diff - s2 * cross).sum(axis=-1)

    else:

        def score(theta):
            # theta: (R, P, K) -> signed pair contribution (R, P, K)
            a, b = _rotate(xp[:, :, None, :], xq[:, :, None, :], theta, imaginary)
            return sign * _weighted(functional, np.stack((a, b), axis=-2)).sum(axis=-1)

    shape = current.shape
    step = np.pi / cfg.grid
    grid = np.broadcast_to(np.arange(cfg.grid) * step, shape + (cfg.grid,))
    grid_scores = score(grid)
    j = np.argmax(grid_scores, axis=-1)[..., None]
    best_theta = np.take_along_axis(grid, j, -1)[..., 0]
    best_score = np.take_along_axis(grid_scores, j, -1)[..., 0]

    # golden-section refinement on [theta_j - step, theta_j + step]
    lo = best_theta - step
    hi = best_theta + step
    c1 = hi - (hi - lo) / _GOLDEN
    c2 = lo + (hi - lo) / _GOLDEN
    f12 = score(np.stack((c1, c2), axis=-1))
    f1, f2 = f12[..., 0], f12[..., 1]
    for _ in range(n_golden):
        left = f1 > f2
        hi = np.where(left, c2, hi)
        lo = np.where(left, lo, c1)
        new = np.where(left, hi - (hi - lo) / _GOLDEN, lo + (hi - lo) / _GOLDEN)
        f_new = score(new[..., None])[..., 0]
        c1, c2 = np.where(left, new, c2), np.where(left, c1, new)
        f1, f2 = np.where(left, f_new, f2), np.where(left, f1, f_new)
    g_theta = np.where(f1 >= f2, c1, c2)
    g_score = np.maximum(f1, f2)
    use_golden = g_score > best_score
    best_theta = np.where(use_golden, g_theta, best_theta)
    best_score = np.where(use_golden, g_score, best_score)

    improve = active[:, None] & (best_score > sign * current + 1e-15)
    if not np.any(improve):
        return
    theta = np.where(improve, best_theta, 0.0)
    new_xp, new_xq = _rotate(xp, xq, theta, imaginary)
    new_vp, new_vq = _rotate(v[:, ps], v[:, qs], theta, imaginary)
    keep = ~improve[..., None]
    x[:, ps] = np.where(keep, xp, new_xp)
    x[:, qs] = np.where(keep, xq, new_xq)
    v[:, ps] = np.where(keep, v[:, ps], new_vp)
    v[:, qs] = np.where(keep, v[:, qs], new_vq)
    contrib[:, ps] = _weighted(functional, x[:, ps])
    contrib[:, qs] = _weighted(functional, x[:, qs])


def _ensemble_from_rows(x: np.ndarray, dims) -> Ensemble:
    w = np.sum(np.abs(x) ** 2, axis=1)
    keep = w > 1e-14
    total = float(np.sum(w[keep]))
    members = tuple(
        (float(w[i] / total), PureState._trusted(dims, x[i] / np.sqrt(w[i])))
        for i in np.nonzero(keep)[0]
    )
    return Ensemble(members, tuple(dims))


def roof_optimize(
    rho,
    functional: PureFunctional,
    direction: str = "max",
    config: RoofConfig | None = None,
) -> RoofResult:
    """Maximize (``"max"``) or minimize (``"min"``) ``sum_i q_i f(psi_i)``.

    The eigendecomposition ensemble is always evaluated as a baseline, so
    a maximization never returns less than it (a minimization never more).

    Args:
        rho: DensityMatrix or PureState.
        functional: vectorized pure-state functional, see ``PureFunctional``.
        direction: ``"max"`` or ``"min"``.
        config: optimizer settings; defaults to ``RoofConfig()``.
    """
    if direction not in ("max", "min"):
        raise ContractViolation(f"direction must be 'max' or 'min', got {direction!r}")
    cfg = config or RoofConfig()
    rho = as_density(rho)
    sign = 1.0 if direction == "max" else -1.0

    spec = hermitian_eig(rho.mat)
    support = spec.eigenvalues > SUPPORT_TOL
    lam = spec.eigenvalues[support]
    lam = lam / lam.sum()
    rank = int(lam.size)
    basis = np.sqrt(lam)[:, None] * spec.eigenvectors[:, support].T  # (r, d)

    eig_ensemble = _ensemble_from_rows(basis, rho.dims)
    eig_value = eig_ensemble.average(functional)
    if rank == 1:
        return RoofResult(eig_value, eig_ensemble, 0, True, (), direction, 0, True, ())

    m = cfg.ensemble_cap if cfg.ensemble_cap is not None else rank * rank
    if m < rank:
        raise ContractViolation(f"ensemble_cap {m} is below the rank {rank}")

    v = np.stack([haar_isometry(rng_from_seed(cfg.seed + k), m, rank) for k in range(cfg.restarts)])
    x = v @ basis
    contrib = _weighted(functional, x)
    n_golden = max(int(ceil(log(2 * np.pi / cfg.grid / cfg.refine_tol) / log(_GOLDEN))), 1)

    rounds = round_robin(m)
    active = np.ones(cfg.restarts, dtype=bool)
    state = (x, v, contrib)
    sweeps = 0
    for _ in range(cfg.max_sweeps):
        if not np.any(active):
            break
        sweeps += 1
        before = contrib.sum(axis=1).copy()
        for ps, qs in rounds:
            for imaginary in (False, True):
                _sweep_round(state, ps, qs, imaginary, functional, sign, active, cfg, n_golden)
        gained = sign * (contrib.sum(axis=1) - before)
        active &= ~(gained < cfg.tol)
    converged = ~active

    # re-derive members from V to shed rotation round-off
    x = v @ basis
    values = []
    ensembles = []
    for k in range(cfg.restarts):
        ens = _ensemble_from_rows(x[k], rho.dims)
        ensembles.append(ens)
        values.append(ens.average(functional))
    signed = sign * np.array(values)
    best = int(np.argmax(signed))

    if sign * eig_value > signed[best]:
        value, ensemble, used_eig, conv = eig_value, eig_ensemble, True, True
    else:
        value, ensemble, used_eig, conv = values[best], ensembles[best], False, bool(converged[best])
    return RoofResult(
        value=float(value),
        ensemble=ensemble,
        restarts_used=cfg.restarts,
        converged=conv,
        best_history=tuple(float(val) for val in values),
        direction=direction,
        sweeps=sweeps,
        from_eigendecomposition=used_eig,
        restart_converged=tuple(bool(c) for c in converged),
    )


def coherence_of_assistance(rho, config: RoofConfig | None = None) -> RoofResult:
    """Largest average ``S(Delta(psi_i))`` over decompositions of ``rho``."""
    return roof_optimize(rho, diagonal_entropy, "max", config)


def coherence_of_formation(rho, config: RoofConfig | None = None) -> RoofResult:
    """Smallest average ``S(Delta(psi_i))`` over decompositions of ``rho``."""
    return roof_optimize(rho, diagonal_entropy, "min", config)


def entanglement_of_assistance(rho, config: RoofConfig | None = None) -> RoofResult:
    """Largest average entanglement entropy over decompositions of a bipartite ``rho``."""
    rho = as_density(rho)
    if rho.n_subsystems != 2:
        raise ContractViolation(f"expected a bipartite state, got dims {rho.dims}")
    return roof_optimize(rho, entanglement_entropy(rho.dims), "max", config)


def entanglement_of_formation(rho, config: RoofConfig | None = None) -> RoofResult:
    rho = as_density(rho)
    if rho.n_subsystems != 2:
        raise ContractViolation(f"expected a bipartite state, got dims {rho.dims}")
    return roof_optimize(rho, entanglement_entropy(rho.dims), "min", config)
