import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherence_lab.errors import ContractViolation, InvariantViolation
from coherence_lab.maxcorr import (
    extract_blocks,
    leaves,
    lift_bipartite,
    make_step,
    run_protocol,
    sample_protocol,
    simulate_lqicc_round_trip,
    simulate_slocc_step,
    state_digest,
    to_maximally_correlated,
)
from coherence_lab.measures import relative_entropy_of_coherence, von_neumann_entropy
from coherence_lab.protocols import validate_incoherent
from coherence_lab.sampling import (
    haar_unitary,
    random_density_matrix,
    random_incoherent_kraus,
    rng_from_seed,
)
from coherence_lab.states import DensityMatrix, PureState, dephase, maximally_mixed, partial_trace

from conftest import ket

seeds = st.integers(0, 2**32 - 1)

DEPHASE = [np.diag([1, 0]), np.diag([0, 1])]
NON_INJECTIVE = [np.array([[1, 1], [0, 0]]) / np.sqrt(2), np.array([[0, 0], [1, -1]]) / np.sqrt(2)]


# ---------------------------------------------------------------------------
# maximally correlated states


def test_mc_of_plus_state_is_bell():
    mc = to_maximally_correlated(PureState((2,), ket(1, 1)))
    bell = ket(1, 0, 0, 1)
    np.testing.assert_allclose(mc.mat, np.outer(bell, bell), atol=1e-15)


def test_mc_of_maximally_mixed_is_classical():
    mc = to_maximally_correlated(maximally_mixed((3,)))
    expected = np.zeros(9)
    expected[[0, 4, 8]] = 1 / 3
    np.testing.assert_allclose(mc.mat, np.diag(expected), atol=1e-15)


@given(seeds, st.integers(1, 5))
def test_mc_preserves_diagonal_and_coherence(seed, d):
    rho = random_density_matrix(rng_from_seed(seed), (d,))
    mc = to_maximally_correlated(rho)
    np.testing.assert_allclose(partial_trace(mc, [0]).mat, np.diag(np.diag(rho.mat)), atol=1e-14)
    # coherence of rho equals the distillable entanglement bound S(B) - S(BC)
    gap = von_neumann_entropy(partial_trace(mc, [0])) - von_neumann_entropy(mc)
    assert abs(gap - relative_entropy_of_coherence(rho)) < 1e-9


# ---------------------------------------------------------------------------
# blocks and lift


def test_blocks_of_product_state(rng):
    a = random_density_matrix(rng, (2,))
    b = random_density_matrix(rng, (3,))
    blocks = extract_blocks(DensityMatrix((2, 3), np.kron(a.mat, b.mat)))
    for (i, j), m in blocks.blocks.items():
        np.testing.assert_allclose(m, b.mat[i, j] * a.mat, atol=1e-15)


@given(seeds)
def test_blocks_reassemble(seed):
    rho = random_density_matrix(rng_from_seed(seed), (3, 2))
    np.testing.assert_array_equal(extract_blocks(rho).reassemble().mat, rho.mat)
    swapped = extract_blocks(rho, b_slot=0)
    assert (swapped.a_dim, swapped.b_dim) == (2, 3)


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_lift_marginals(seed, da, db):
    rho = random_density_matrix(rng_from_seed(seed), (da, db))
    lifted = lift_bipartite(rho)
    assert lifted.dims == (da, db, db)
    # C copies B's index, so either two-party marginal is rho with B dephased
    dephased_b = dephase(rho, [1]).mat
    np.testing.assert_allclose(partial_trace(lifted, [0, 1]).mat, dephased_b, atol=1e-14)
    np.testing.assert_allclose(partial_trace(lifted, [0, 2]).mat, dephased_b, atol=1e-14)
    np.testing.assert_allclose(partial_trace(lifted, [0]).mat, partial_trace(rho, [0]).mat, atol=1e-14)
    assert abs(np.trace(lifted.mat) - 1) < 1e-14


def test_lift_of_product_with_plus():
    rho = np.kron(np.diag([1, 0]), np.full((2, 2), 0.5))
    lifted = lift_bipartite(DensityMatrix((2, 2), rho))
    ghz_like = np.kron([1, 0], ket(1, 0, 0, 1))
    np.testing.assert_allclose(lifted.mat, np.outer(ghz_like, ghz_like), atol=1e-15)


@given(seeds)
@settings(max_examples=20)
def test_lift_commutes_with_alice_unitaries(seed):
    rng = rng_from_seed(seed)
    rho = random_density_matrix(rng, (2, 3))
    u = haar_unitary(rng, 2)
    ua = np.kron(u, np.eye(3))
    rotated = DensityMatrix((2, 3), ua @ rho.mat @ ua.conj().T)
    ul = np.kron(u, np.eye(9))
    lifted = lift_bipartite(rho).mat
    np.testing.assert_allclose(lift_bipartite(rotated).mat, ul @ lifted @ ul.conj().T, atol=1e-12)


def test_digest_ignores_tiny_noise_and_negative_zero():
    rho = maximally_mixed((2,))
    noisy = DensityMatrix((2,), rho.mat + np.diag([1e-14, -1e-14]))
    assert state_digest(rho) == state_digest(noisy)
    assert state_digest(rho) != state_digest(maximally_mixed((1, 2)))
    assert len(state_digest(rho)) == 64


# ---------------------------------------------------------------------------
# one SLOCC step


@given(seeds, st.integers(2, 3), st.integers(1, 3))
@settings(max_examples=25)
def test_slocc_step_reproduces_lqicc_outcome(seed, d_b, n):
    rng = rng_from_seed(seed)
    omega = random_density_matrix(rng, (2, d_b))
    ch = validate_incoherent(random_incoherent_kraus(rng, d_b, n_maps=n))
    total = 0.0
    for alpha in range(len(ch)):
        tr = simulate_slocc_step(omega, ch, alpha)
        total += tr.p_alpha
        if tr.aborted:
            continue
        assert tr.lift_deviation < 1e-10
        assert abs(tr.ancilla_prob * tr.q_alpha * d_b - tr.p_alpha) < 1e-12
        if tr.deterministic_path:
            assert tr.success_prob == 1.0
        else:
            assert tr.success_prob == tr.ancilla_prob
    assert abs(total - 1) < 1e-12


def test_identity_channel_is_deterministic(rng):
    omega = random_density_matrix(rng, (2, 2))
    tr = simulate_slocc_step(omega, validate_incoherent([np.eye(2)]), 0)
    assert tr.deterministic_path and tr.success_prob == 1.0
    assert abs(tr.p_alpha - 1) < 1e-14 and abs(tr.q_alpha - 1) < 1e-14
    assert abs(tr.ancilla_prob - 0.5) < 1e-14
    np.testing.assert_allclose(tr.final_state.mat, lift_bipartite(omega).mat, atol=1e-14)


def test_non_injective_channel_takes_ancilla_path():
    omega = DensityMatrix((2, 2), np.kron(np.diag([1, 0]), np.full((2, 2), 0.5)))
    ch = validate_incoherent(NON_INJECTIVE)
    tr0 = simulate_slocc_step(omega, ch, 0)
    assert not tr0.deterministic_path
    # K0 |+> = |0>, so outcome 0 is certain and outcome 1 aborts
    assert abs(tr0.p_alpha - 1) < 1e-14
    assert tr0.lift_deviation < 1e-12
    tr1 = simulate_slocc_step(omega, ch, 1)
    assert tr1.aborted and tr1.final_state is None


def test_zero_lifted_probability_means_zero_outcome(rng):
    # B in |1>: the dephasing outcome 0 has zero probability on both sides
    omega = DensityMatrix((2, 2), np.kron(random_density_matrix(rng, (2,)).mat, np.diag([0, 1])))
    tr = simulate_slocc_step(omega, validate_incoherent(DEPHASE), 0)
    assert tr.q_alpha == 0 and tr.p_alpha == 0 and tr.aborted


def test_slocc_step_contracts(rng):
    omega = random_density_matrix(rng, (2, 2))
    with pytest.raises(ContractViolation):
        simulate_slocc_step(omega, validate_incoherent([np.eye(3)]), 0)
    with pytest.raises(ContractViolation):
        simulate_slocc_step(omega, validate_incoherent(DEPHASE), 2)
    with pytest.raises(ContractViolation):
        simulate_slocc_step(random_density_matrix(rng, (2, 2, 2)), validate_incoherent(DEPHASE), 0)


def test_b_slot_zero_matches_swapped_input(rng):
    from coherence_lab.states import permute_subsystems

    omega = random_density_matrix(rng, (3, 2))
    ch = validate_incoherent(NON_INJECTIVE)
    a = simulate_slocc_step(omega, ch, 0, b_slot=1)
    b = simulate_slocc_step(permute_subsystems(omega, [1, 0]), ch, 0, b_slot=0)
    assert abs(a.p_alpha - b.p_alpha) < 1e-14
    np.testing.assert_allclose(a.final_state.mat, b.final_state.mat, atol=1e-14)


# ---------------------------------------------------------------------------
# protocols


def test_make_step_validation():
    with pytest.raises(InvariantViolation):
        make_step("B", [np.array([[1, 1], [1, -1]]) / np.sqrt(2)])
    with pytest.raises(InvariantViolation):
        make_step("A", [np.eye(2) * 0.5])
    with pytest.raises(ContractViolation):
        make_step("C", [np.eye(2)])
    # Alice may use coherent operations
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert make_step("A", [h]).party == "A"


def test_alice_only_protocol(rng):
    rho = random_density_matrix(rng, (2, 2))
    projectors = [np.outer(v, v.conj()) for v in (ket(1, 1), ket(1, -1))]
    tree = run_protocol(rho, [make_step("A", projectors)])
    assert sorted(tree) == ["0", "1"]
    assert abs(sum(n.probability for n in tree.values()) - 1) < 1e-12
    for node in tree.values():
        assert node.operation == "local-quantum"
        assert node.lift_deviation < 1e-12


def test_bob_dephasing_protocol():
    rho = DensityMatrix((2, 2), np.kron(np.diag([1, 0]), np.full((2, 2), 0.5)))
    tree = run_protocol(rho, [make_step("B", DEPHASE)])
    assert [round(tree[p].probability, 12) for p in ("0", "1")] == [0.5, 0.5]
    for node in tree.values():
        assert node.operation == "local-incoherent"
        assert node.deterministic_path and node.success_prob == 1
        assert relative_entropy_of_coherence(partial_trace(node.post_state, [1])) == 0


@given(seeds)
@settings(max_examples=20)
def test_round_trip_path_probabilities_sum_to_one(seed):
    rng = rng_from_seed(seed)
    rho = random_density_matrix(rng, (2, 3))
    u = haar_unitary(rng, 2)
    alice = [np.outer(u[:, k], u[:, k].conj()) for k in range(2)]
    ch = validate_incoherent(random_incoherent_kraus(rng, 3, n_maps=2))
    out = simulate_lqicc_round_trip(rho, alice, ch)
    assert abs(sum(n.path_probability for n in out) - 1) < 1e-12
    for node in out:
        assert "/" in node.path
        if not node.aborted:
            assert node.lift_deviation < 1e-10


def test_depth_cap(rng):
    rho = random_density_matrix(rng, (2, 2))
    step = make_step("B", [np.eye(2)])
    assert len(run_protocol(rho, [step] * 8)) == 8
    with pytest.raises(ContractViolation):
        run_protocol(rho, [step] * 9)


def test_aborted_branches_are_not_expanded():
    rho = DensityMatrix((2, 2), np.kron(np.diag([1, 0]), np.diag([1, 0])))
    tree = run_protocol(rho, [make_step("B", DEPHASE), make_step("B", DEPHASE)])
    assert tree["1"].aborted
    assert not any(p.startswith("1/") for p in tree)
    assert {n.path for n in leaves(tree)} == {"0/0", "0/1", "1"}


def test_monte_carlo_frequencies(rng):
    rho = random_density_matrix(rng, (2, 2))
    tree = run_protocol(rho, [make_step("B", NON_INJECTIVE)])
    n = 20000
    counts = sample_protocol(tree, n, rng_from_seed(5))
    for path, node in tree.items():
        p = node.probability
        sigma = np.sqrt(n * p * (1 - p))
        assert abs(counts[path]["count"] - n * p) <= 3 * sigma + 1
        k = counts[path]["ancilla_successes"]
        expected = counts[path]["count"] * node.ancilla_prob
        assert abs(k - expected) <= 3 * np.sqrt(expected * (1 - node.ancilla_prob)) + 1
    assert sum(c["count"] for c in counts.values()) == n
