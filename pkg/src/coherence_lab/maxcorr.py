"""Maximally correlated images of states and the tripartite SLOCC simulator.

A bipartite state ``rho = sum_ij M_ij (x) |i><j|_B`` is lifted to
``sum_ij M_ij (x) |ii><jj|_BC``, where C copies B's index.  Every round of
an LQICC protocol (quantum operations on A, incoherent operations on B)
has a stochastic LOCC counterpart on the lifted states.  This module runs
both sides and compares them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ContractViolation
from .protocols import (
    IncoherentChannel,
    apply_kraus,
    check_completeness,
    local_operator,
    validate_incoherent,
)
from .states import DensityMatrix, as_density, partial_trace, permute_subsystems, trace_distance

ABORT_TOL = 1e-14
MAX_DEPTH = 8


def to_maximally_correlated(rho) -> DensityMatrix:
    """``sum_ij rho_ij |ii><jj|`` on ``d x d`` (the whole input counts as one system)."""
    rho = as_density(rho)
    d = rho.dim
    diag = np.arange(d) * (d + 1)
    out = np.zeros((d * d, d * d), dtype=complex)
    out[np.ix_(diag, diag)] = rho.mat
    return DensityMatrix._trusted((d, d), out)


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    """Operators ``M_ij`` on A with ``rho = sum_ij M_ij (x) |i><j|_B``."""

    blocks: dict
    a_dim: int
    b_dim: int

    def reassemble(self) -> DensityMatrix:
        t = np.zeros((self.a_dim, self.b_dim, self.a_dim, self.b_dim), dtype=complex)
        for (i, j), m in self.blocks.items():
            t[:, i, :, j] = m
        d = self.a_dim * self.b_dim
        return DensityMatrix._trusted((self.a_dim, self.b_dim), t.reshape(d, d))


def _a_first(rho, b_slot: int) -> DensityMatrix:
    rho = as_density(rho)
    if rho.n_subsystems != 2:
        raise ContractViolation(f"expected a bipartite state, got dims {rho.dims}")
    if b_slot not in (0, 1):
        raise ContractViolation(f"b_slot must be 0 or 1, got {b_slot}")
    return rho if b_slot == 1 else permute_subsystems(rho, [1, 0])


def extract_blocks(rho, b_slot: int = 1) -> BlockDecomposition:
    """Split a bipartite state into A-operators indexed by B's basis.

    With ``b_slot=0`` the roles are read off the swapped state, so the
    decomposition always describes ``A (x) B``.
    """
    rho = _a_first(rho, b_slot)
    d_a, d_b = rho.dims
    t = rho.mat.reshape(d_a, d_b, d_a, d_b)
    blocks = {(i, j): t[:, i, :, j].copy() for i in range(d_b) for j in range(d_b)}
    return BlockDecomposition(blocks, d_a, d_b)


def lift_bipartite(rho, b_slot: int = 1) -> DensityMatrix:
    """``sum_ij M_ij (x) |ii><jj|`` on ``A (x) B (x) C`` with ``dim C = dim B``."""
    rho = _a_first(rho, b_slot)
    d_a, d_b = rho.dims
    t = rho.mat.reshape(d_a, d_b, d_a, d_b)
    out = np.zeros((d_a, d_b, d_b, d_a, d_b, d_b), dtype=complex)
    idx = np.arange(d_b)
    # out[a, i, i, a', j, j] = t[a, i, a', j]
    out[:, idx[:, None], idx[:, None], :, idx[None, :], idx[None, :]] = t.transpose(1, 3, 0, 2)
    d = d_a * d_b * d_b
    return DensityMatrix._trusted((d_a, d_b, d_b), out.reshape(d, d))


def state_digest(rho) -> str:
    """SHA-256 over dims and the matrix rounded to 12 decimals, as little-endian bytes."""
    rho = as_density(rho)
    mat = np.round(np.asarray(rho.mat), 12) + 0.0  # + 0.0 folds -0.0 into 0.0
    h = hashlib.sha256()
    h.update(np.asarray(rho.dims, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(mat, dtype="<c16").tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# one incoherent step on Bob's side


@dataclass(frozen=True, eq=False)
class SloccTrace:
    """Both sides of one outcome ``alpha`` of Bob's incoherent measurement.

    ``p_alpha`` is the LQICC outcome probability and ``q_alpha`` the
    probability of the same outcome on the lifted state.
    ``ancilla_prob`` is the probability that Charlie's ancilla lands on
    ``|b_0>``; it always satisfies ``ancilla_prob * q_alpha * d_B = p_alpha``.
    ``success_prob`` is the conditional probability of reaching the
    target given outcome ``alpha``: ``ancilla_prob`` on the ancilla path
    and 1 on the deterministic path, taken when ``f_alpha`` is a bijection.
    """

    alpha: int
    p_alpha: float
    q_alpha: float
    success_prob: float
    ancilla_prob: float
    final_state: DensityMatrix | None
    target_state: DensityMatrix | None
    deterministic_path: bool
    aborted: bool
    lift_deviation: float
    d_b: int


def outcome_probability(blocks: BlockDecomposition, ch: IncoherentChannel, alpha: int) -> float:
    """``p_alpha = Tr sum_ij c_i c_j^* M_ij (x) |f(i)><f(j)|`` from the blocks."""
    c = ch.coeffs[alpha]
    f = ch.maps[alpha]
    total = 0.0
    for (i, j), m in blocks.blocks.items():
        if f[i] == f[j]:
            total += (c[i] * np.conj(c[j]) * np.trace(m)).real
    return float(total)


def _relabel_unitary(f: np.ndarray) -> np.ndarray:
    """Permutation on ``C (x) C~`` with ``|i, 0> -> |f(i), i>``."""
    d = f.size
    images = {(i, 0): (int(f[i]), i) for i in range(d)}
    taken = set(images.values())
    rest_dom = [(c, t) for c in range(d) for t in range(d) if (c, t) not in images]
    rest_img = [(c, t) for c in range(d) for t in range(d) if (c, t) not in taken]
    images.update(zip(rest_dom, rest_img))
    u = np.zeros((d * d, d * d))
    for (c, t), (c2, t2) in images.items():
        u[c2 * d + t2, c * d + t] = 1.0
    return u


def simulate_slocc_step(omega, ch: IncoherentChannel, alpha: int, b_slot: int = 1) -> SloccTrace:
    """Reproduce outcome ``alpha`` of Bob's incoherent measurement on the lifted state.

    1. Apply ``K_alpha`` to B of the lifted state ``omega~``; this outcome
       has probability ``q_alpha``.
    2. Charlie adds an ancilla ``C~`` in ``|0>`` and applies the
       permutation ``|i>_C |0> -> |f(i)>_C |i>``.
    3. Project ``C~`` onto ``|b_0> = sum_j |j> / sqrt(d_B)`` and discard it.

    The result is compared with the lift of Bob's LQICC post-state.  If
    ``f_alpha`` is a bijection Charlie instead applies ``|i> -> |f(i)>``
    to C and succeeds with probability 1.  An outcome with
    ``p_alpha < 1e-14`` aborts and carries no states.

    Raises:
        ContractViolation: if ``alpha`` is out of range or the channel
            does not act on B's dimension.
    """
    omega = _a_first(omega, b_slot)
    d_a, d_b = omega.dims
    if ch.dim != d_b:
        raise ContractViolation(f"channel acts on dimension {ch.dim}, subsystem B has {d_b}")
    if not 0 <= alpha < len(ch):
        raise ContractViolation(f"outcome {alpha} out of range for {len(ch)} Kraus operators")

    blocks = extract_blocks(omega)
    p = outcome_probability(blocks, ch, alpha)
    lifted = lift_bipartite(omega)
    k = np.asarray(ch.kraus[alpha])
    k_full = local_operator(k, lifted.dims, 1)
    tau_un = k_full @ lifted.mat @ k_full.conj().T
    q = float(np.trace(tau_un).real)
    deterministic = ch.is_bijective(alpha)

    if p < ABORT_TOL:
        return SloccTrace(alpha, max(p, 0.0), max(q, 0.0), 0.0, 0.0, None, None, deterministic, True, 0.0, d_b)

    tau = tau_un / q
    # step 2: ancilla and controlled relabeling on C (x) C~
    ket0 = np.zeros(d_b)
    ket0[0] = 1.0
    tau_anc = np.kron(tau, np.outer(ket0, ket0))
    u = np.kron(np.eye(d_a * d_b), _relabel_unitary(ch.maps[alpha]))
    mu = u @ tau_anc @ u.T
    # step 3: project C~ onto |b_0>
    b0 = np.full(d_b, 1 / np.sqrt(d_b))
    proj = np.kron(np.eye(d_a * d_b * d_b), np.outer(b0, b0))
    projected = proj @ mu @ proj
    ancilla_prob = float(np.trace(projected).real)
    kept = DensityMatrix._trusted((d_a, d_b, d_b, d_b), projected / ancilla_prob)
    via_ancilla = partial_trace(kept, [0, 1, 2])

    if deterministic:
        perm = np.zeros((d_b, d_b))
        perm[ch.maps[alpha], np.arange(d_b)] = 1.0
        u_c = local_operator(perm, lifted.dims, 2)
        final = DensityMatrix._trusted(lifted.dims, u_c @ tau @ u_c.T)
        success = 1.0
    else:
        final = via_ancilla
        success = ancilla_prob

    # target: lift of Bob's LQICC post-state
    post = apply_kraus(omega, [k], 1)[0].post_state
    target = lift_bipartite(post)
    deviation = trace_distance(final, target)
    return SloccTrace(alpha, p, q, success, ancilla_prob, final, target, deterministic, False, deviation, d_b)


# ---------------------------------------------------------------------------
# multi-step protocols


class ProtocolStep(NamedTuple):
    """One local operation: ``party`` is ``"A"`` (any complete Kraus set) or ``"B"``."""

    party: str
    kraus: tuple[np.ndarray, ...]
    channel: IncoherentChannel | None = None


def make_step(party: str, kraus) -> ProtocolStep:
    """Validate one step; Bob's Kraus set must be incoherent."""
    if party not in ("A", "B"):
        raise ContractViolation(f"party must be 'A' or 'B', got {party!r}")
    ops = tuple(np.asarray(k, dtype=complex) for k in kraus)
    if party == "B":
        ch = validate_incoherent(ops)
        return ProtocolStep("B", ch.kraus, ch)
    if not ops:
        raise ContractViolation("a step needs at least one Kraus operator")
    for a, k in enumerate(ops):
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape != ops[0].shape:
            raise ContractViolation(f"Kraus operator {a} of Alice's step has shape {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ContractViolation(f"Kraus operator {a} of Alice's step has non-finite entries")
    check_completeness(ops)
    return ProtocolStep("A", ops, None)


@dataclass(frozen=True, eq=False)
class TraceNode:
    """One outcome of one step, keyed in the tree by its outcome path."""

    path: str
    party: str
    outcome_index: int
    probability: float
    path_probability: float
    post_state: DensityMatrix | None
    lifted_state: DensityMatrix | None
    lift_deviation: float
    aborted: bool
    deterministic_path: bool
    q_alpha: float | None = None
    success_prob: float = 1.0
    ancilla_prob: float | None = None

    @property
    def operation(self) -> str:
        return "local-quantum" if self.party == "A" else "local-incoherent"

    @property
    def post_state_digest(self) -> str | None:
        return state_digest(self.post_state) if self.post_state is not None else None


def run_protocol(rho, steps: Sequence[ProtocolStep], b_slot: int = 1, max_depth: int = MAX_DEPTH) -> dict:
    """Run every branch of a protocol on both the LQICC and the lifted side.

    Returns a dict from outcome paths (``"0"``, ``"0/2"``, ...) to
    :class:`TraceNode`.  Alice's steps act on A of both states; Bob's
    steps go through :func:`simulate_slocc_step`.  Branches with
    probability below 1e-14 are marked aborted and not expanded.

    Raises:
        ContractViolation: if the protocol has more than ``max_depth``
            steps or a step does not fit the state.
    """
    rho = _a_first(rho, b_slot)
    if len(steps) > max_depth:
        raise ContractViolation(f"protocol has {len(steps)} steps, the depth cap is {max_depth}")
    tree: dict[str, TraceNode] = {}
    frontier = [("", rho, 1.0)]
    for step in steps:
        nxt = []
        for prefix, state, path_p in frontier:
            for node in _expand(step, state, prefix, path_p):
                tree[node.path] = node
                if not node.aborted:
                    nxt.append((node.path, node.post_state, node.path_probability))
        frontier = nxt
    return tree


def _expand(step: ProtocolStep, state: DensityMatrix, prefix: str, path_p: float):
    sep = "/" if prefix else ""
    if step.party == "A":
        if step.kraus[0].shape[0] != state.dims[0]:
            raise ContractViolation(
                f"Alice's operators act on dimension {step.kraus[0].shape[0]}, A has {state.dims[0]}"
            )
        lifted = lift_bipartite(state)
        for out in apply_kraus(state, step.kraus, 0):
            path = f"{prefix}{sep}{out.outcome_index}"
            if out.probability < ABORT_TOL or out.post_state is None:
                yield TraceNode(path, "A", out.outcome_index, out.probability, path_p * out.probability,
                                None, None, 0.0, True, True)
                continue
            # the lifted side: the same operation on A of the lifted state
            lifted_out = apply_kraus(lifted, [step.kraus[out.outcome_index]], 0)[0].post_state
            dev = trace_distance(lifted_out, lift_bipartite(out.post_state))
            yield TraceNode(path, "A", out.outcome_index, out.probability, path_p * out.probability,
                            out.post_state, lifted_out, dev, False, True)
        return
    for alpha in range(len(step.kraus)):
        tr = simulate_slocc_step(state, step.channel, alpha)
        path = f"{prefix}{sep}{alpha}"
        post = None if tr.aborted else apply_kraus(state, [step.kraus[alpha]], 1)[0].post_state
        yield TraceNode(path, "B", alpha, tr.p_alpha, path_p * tr.p_alpha, post, tr.final_state,
                        tr.lift_deviation, tr.aborted, tr.deterministic_path, tr.q_alpha,
                        tr.success_prob, tr.ancilla_prob)


def leaves(tree: dict) -> list[TraceNode]:
    """Nodes with no children (completed runs and aborted branches)."""
    parents = {p.rsplit("/", 1)[0] for p in tree if "/" in p}
    return [n for p, n in sorted(tree.items()) if p not in parents]


def sample_protocol(tree: dict, runs: int, rng: np.random.Generator) -> dict:
    """Monte-Carlo runs of a protocol tree.

    Outcome counts are split down the tree with multinomial draws, and at
    each Bob step on the ancilla path the number of successful ancilla
    projections is drawn from a binomial.  Returns per-path counts
    ``{"count": n, "ancilla_successes": k}``.
    """
    children: dict[str, list[str]] = {}
    for p in sorted(tree, key=lambda s: [int(x) for x in s.split("/")]):
        parent = p.rsplit("/", 1)[0] if "/" in p else ""
        children.setdefault(parent, []).append(p)
    counts: dict[str, dict] = {}
    pending = [("", int(runs))]
    while pending:
        parent, n = pending.pop(0)
        kids = children.get(parent, [])
        if not kids or n == 0:
            continue
        probs = np.array([max(tree[k].probability, 0.0) for k in kids])
        probs = probs / probs.sum()
        draws = rng.multinomial(n, probs)
        for k, c in zip(kids, draws):
            node = tree[k]
            rec = {"count": int(c)}
            if node.ancilla_prob is not None and not node.aborted:
                rec["ancilla_successes"] = int(rng.binomial(int(c), min(max(node.ancilla_prob, 0.0), 1.0)))
            counts[k] = rec
            pending.append((k, int(c)))
    return counts


def simulate_lqicc_round_trip(rho, alice_kraus, bob_ch: IncoherentChannel, b_slot: int = 1) -> list[TraceNode]:
    """One Alice round followed by one Bob round; one trace per realized outcome pair.

    The returned leaves carry Bob's :class:`SloccTrace` data; their
    ``path_probability`` values sum to 1 on the LQICC side.
    """
    steps = [make_step("A", alice_kraus), ProtocolStep("B", bob_ch.kraus, bob_ch)]
    return leaves(run_protocol(rho, steps, b_slot))
