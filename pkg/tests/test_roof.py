import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherence_lab.errors import ContractViolation
from coherence_lab.measures import (
    binary_entropy,
    regularized_coa,
    regularized_eoa,
    relative_entropy_of_coherence,
)
from coherence_lab.roof import (
    RoofConfig,
    coherence_of_assistance,
    coherence_of_formation,
    diagonal_entropy,
    entanglement_entropy,
    entanglement_of_assistance,
    entanglement_of_formation,
    roof_optimize,
    _weighted,
    round_robin,
)
from coherence_lab.sampling import random_density_matrix, random_pure_state, rng_from_seed
from coherence_lab.states import DensityMatrix, maximally_mixed, partial_trace
from coherence_lab.linalg import hermitian_eig

seeds = st.integers(0, 2**32 - 1)


def _plain(functional):
    # same functional without the sesquilinear fast path
    return lambda vecs: functional(vecs)


# ---------------------------------------------------------------------------
# building blocks


def test_round_robin_covers_every_pair_once():
    for m in (2, 3, 4, 7, 8):
        seen = []
        for ps, qs in round_robin(m):
            members = list(ps) + list(qs)
            assert len(members) == len(set(members))
            seen += [tuple(sorted(pair)) for pair in zip(ps, qs)]
        assert sorted(seen) == [(i, j) for i in range(m) for j in range(i + 1, m)]


def test_diagonal_entropy_of_rows():
    rows = np.array([[1, 1j], [1, 0], [0, -1]], dtype=complex) / np.array([[np.sqrt(2)], [1], [1]])
    np.testing.assert_allclose(diagonal_entropy(rows), [1, 0, 0], atol=1e-15)


@given(seeds)
def test_statistic_path_matches_plain_evaluation(seed):
    rng = rng_from_seed(seed)
    x = rng.standard_normal((5, 6)) + 1j * rng.standard_normal((5, 6))
    x[0] = 0
    for f in (diagonal_entropy, entanglement_entropy((2, 3)), entanglement_entropy((3, 2))):
        np.testing.assert_allclose(_weighted(f, x), _weighted(_plain(f), x), atol=1e-12)


def test_entanglement_entropy_of_bell_rows():
    f = entanglement_entropy((2, 2))
    rows = np.array([[1, 0, 0, 1], [1, 0, 0, 0]], dtype=complex) / np.array([[np.sqrt(2)], [1]])
    np.testing.assert_allclose(f(rows), [1, 0], atol=1e-12)


def test_config_validation():
    with pytest.raises(ContractViolation):
        RoofConfig(restarts=0)
    with pytest.raises(ContractViolation):
        RoofConfig(ensemble_cap=0)
    with pytest.raises(ContractViolation):
        roof_optimize(maximally_mixed((2,)), diagonal_entropy, "up")
    with pytest.raises(ContractViolation):
        coherence_of_assistance(maximally_mixed((3,)), RoofConfig(ensemble_cap=2))


# ---------------------------------------------------------------------------
# coherence of assistance


def test_pure_state_short_circuits(rng):
    psi = random_pure_state(rng, (3,))
    res = coherence_of_assistance(psi)
    assert res.from_eigendecomposition and res.restarts_used == 0
    assert abs(res.value - relative_entropy_of_coherence(psi)) < 1e-12


def test_maximally_mixed_qubit():
    res = coherence_of_assistance(maximally_mixed((2,)), RoofConfig(restarts=4))
    assert abs(res.value - 1) < 1e-9
    assert res.ensemble.realizes(maximally_mixed((2,)))


@pytest.mark.parametrize("seed", range(6))
def test_qubit_assistance_equals_regularized_value(seed):
    rho = random_density_matrix(rng_from_seed(seed), (2,))
    res = coherence_of_assistance(rho, RoofConfig(restarts=8, seed=seed))
    assert abs(res.value - regularized_coa(rho)) < 1e-6
    assert res.ensemble.realizes(rho, 1e-10)


def _two_member_grid_max(rho, step=1e-3):
    """Brute-force max over all two-member decompositions of a rank-2 state.

    Every such decomposition is V @ (sqrt(lam) * eigvecs) for a 2x2 unitary V;
    up to row phases V is fixed by an angle theta and a relative phase phi.
    """
    lam, vec = np.linalg.eigh(rho.mat)
    keep = lam > 1e-12
    basis = np.sqrt(lam[keep])[:, None] * vec[:, keep].T
    thetas = np.arange(0, np.pi / 2 + step, step)
    phis = np.arange(0, 2 * np.pi, step)
    best = -np.inf
    for theta in thetas:
        c, s = np.cos(theta), np.sin(theta)
        e = np.exp(1j * phis)[:, None]
        rows_a = c * basis[0] + e * s * basis[1]
        rows_b = -np.conj(e) * s * basis[0] + c * basis[1]
        total = 0
        for rows in (rows_a, rows_b):
            p = np.abs(rows) ** 2
            w = p.sum(axis=1, keepdims=True)
            q = p / w
            with np.errstate(divide="ignore", invalid="ignore"):
                h = -np.sum(np.where(q > 0, q * np.log2(q), 0), axis=1)
            total = total + w[:, 0] * h
        best = max(best, float(total.max()))
    return best


@pytest.mark.parametrize("seed", [0, 1])
def test_rank2_qutrit_against_grid(seed):
    rho = random_density_matrix(rng_from_seed(50 + seed), (3,), rank=2)
    res = coherence_of_assistance(rho, RoofConfig(restarts=16, ensemble_cap=2, seed=seed))
    grid = _two_member_grid_max(rho)
    assert res.value >= grid - 1e-9
    assert res.value - grid < 1e-5


@given(seeds)
@settings(max_examples=15)
def test_assistance_bounded_by_regularized_value(seed):
    rng = rng_from_seed(seed)
    rho = random_density_matrix(rng, (3,), rank=int(rng.integers(2, 4)))
    res = coherence_of_assistance(rho, RoofConfig(restarts=4, seed=seed))
    assert res.value <= regularized_coa(rho) + 1e-6
    assert res.value >= relative_entropy_of_coherence(rho) - 1e-9
    assert res.ensemble.realizes(rho, 1e-9)


def test_more_restarts_never_worse():
    rho = random_density_matrix(rng_from_seed(9), (3,))
    values = [coherence_of_assistance(rho, RoofConfig(restarts=n, seed=4)).value for n in (2, 4, 8)]
    assert values[0] <= values[1] <= values[2]


def test_batched_restarts_match_single_runs():
    rho = random_density_matrix(rng_from_seed(12), (3,))
    batch = coherence_of_assistance(rho, RoofConfig(restarts=4, seed=100))
    singles = [coherence_of_assistance(rho, RoofConfig(restarts=1, seed=100 + k)) for k in range(4)]
    for k, single in enumerate(singles):
        assert abs(batch.best_history[k] - single.best_history[0]) < 1e-12


def test_deterministic_for_fixed_seed():
    rho = random_density_matrix(rng_from_seed(13), (3,))
    cfg = RoofConfig(restarts=4, seed=77)
    a, b = coherence_of_assistance(rho, cfg), coherence_of_assistance(rho, cfg)
    assert a.value == b.value
    assert a.best_history == b.best_history


def test_fast_path_matches_generic_path():
    rho = random_density_matrix(rng_from_seed(14), (3,))
    cfg = RoofConfig(restarts=4, seed=5)
    fast = roof_optimize(rho, diagonal_entropy, "max", cfg)
    slow = roof_optimize(rho, _plain(diagonal_entropy), "max", cfg)
    assert abs(fast.value - slow.value) < 1e-7


def test_reports_convergence_flags():
    res = coherence_of_assistance(random_density_matrix(rng_from_seed(16), (2,)), RoofConfig(restarts=3))
    assert len(res.restart_converged) == 3
    assert res.converged


# ---------------------------------------------------------------------------
# coherence of formation


def qubit_formation_closed_form(rho):
    c = 2 * abs(rho.mat[0, 1])
    return binary_entropy((1 + np.sqrt(max(1 - c * c, 0.0))) / 2)


@pytest.mark.parametrize("seed", range(6))
def test_qubit_formation_closed_form(seed):
    rho = random_density_matrix(rng_from_seed(200 + seed), (2,))
    res = coherence_of_formation(rho, RoofConfig(restarts=8, seed=seed))
    assert abs(res.value - qubit_formation_closed_form(rho)) < 1e-6


@given(seeds)
@settings(max_examples=15)
def test_formation_dominates_relative_entropy(seed):
    rng = rng_from_seed(seed)
    rho = random_density_matrix(rng, (3,))
    res = coherence_of_formation(rho, RoofConfig(restarts=2, seed=seed))
    assert res.value >= relative_entropy_of_coherence(rho) - 1e-9


def test_formation_vanishes_on_incoherent_state():
    rho = DensityMatrix((3,), np.diag([0.2, 0.3, 0.5]))
    assert coherence_of_formation(rho, RoofConfig(restarts=2)).value < 1e-9


# ---------------------------------------------------------------------------
# entanglement roofs


def test_eoa_of_maximally_mixed_two_qubits():
    res = entanglement_of_assistance(maximally_mixed((2, 2)), RoofConfig(restarts=4))
    assert abs(res.value - 1) < 1e-6


def test_eof_of_product_mixture_is_zero():
    rho = DensityMatrix((2, 2), np.diag([0.5, 0, 0, 0.5]))
    assert entanglement_of_formation(rho, RoofConfig(restarts=4)).value < 1e-9


def test_eof_of_werner_like_state_matches_concurrence_formula():
    # p |Phi+><Phi+| + (1-p) |01><01| has concurrence p (Wootters)
    p = 0.7
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    mat = p * np.outer(phi, phi) + (1 - p) * np.diag([0, 1, 0, 0])
    rho = DensityMatrix((2, 2), mat)
    expected = binary_entropy((1 + np.sqrt(1 - p * p)) / 2)
    res = entanglement_of_formation(rho, RoofConfig(restarts=8))
    assert abs(res.value - expected) < 1e-6


@given(seeds)
@settings(max_examples=10)
def test_eoa_bounded_by_regularized_value(seed):
    rho = random_density_matrix(rng_from_seed(seed), (2, 2), rank=2)
    res = entanglement_of_assistance(rho, RoofConfig(restarts=2, seed=seed))
    assert res.value <= regularized_eoa(rho) + 1e-6


def test_entanglement_roof_requires_bipartite():
    with pytest.raises(ContractViolation):
        entanglement_of_assistance(maximally_mixed((4,)))


def test_eigen_ensemble_is_realized(rng):
    rho = random_density_matrix(rng, (2, 2))
    res = entanglement_of_formation(rho, RoofConfig(restarts=2))
    assert res.ensemble.realizes(rho, 1e-9)
    spec = hermitian_eig(partial_trace(rho, [0]).mat)
    assert spec.eigenvalues.sum() == pytest.approx(1)
