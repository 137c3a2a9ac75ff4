"""Incoherent channels and the assisted-coherence protocols.

Alice holds subsystem A and may do anything quantum mechanics allows; Bob
holds B and is restricted to incoherent operations.  The functions here
build the measurements that let Alice steer Bob's coherence, and check
them by direct simulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ContractViolation, InvariantViolation
from .linalg import eigvalsh
from .measures import (
    INCOHERENT_TOL,
    qi_defect,
    regularized_coa,
    relative_entropy_of_coherence,
)
from .roof import RoofConfig, RoofResult, coherence_of_assistance
from .states import (
    DensityMatrix,
    PureState,
    as_density,
    partial_trace,
    permute_subsystems,
)

KRAUS_ZERO_TOL = 1e-12
COMPLETENESS_TOL = 1e-10
PROB_TOL = 1e-12


# ---------------------------------------------------------------------------
# channels


@dataclass(frozen=True, eq=False)
class IncoherentChannel:
    """Complete set of incoherent Kraus operators ``K_a = sum_i c_{a,i} |f_a(i)><i|``.

    ``maps[a][i]`` is ``f_a(i)`` and ``coeffs[a][i]`` is ``c_{a,i}``.  For a
    column with ``c_{a,i} = 0`` the target is arbitrary; it is filled with
    the smallest unused targets so that ``f_a`` is a bijection whenever its
    restriction to the nonzero columns is injective.

    Build instances with :func:`validate_incoherent`.
    """

    kraus: tuple[np.ndarray, ...]
    coeffs: tuple[np.ndarray, ...]
    maps: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def __len__(self) -> int:
        return len(self.kraus)

    def is_bijective(self, alpha: int) -> bool:
        f = self.maps[alpha]
        return len(set(f.tolist())) == f.size


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _check_kraus_shapes(kraus) -> list[np.ndarray]:
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    if not ops:
        raise ContractViolation("a channel needs at least one Kraus operator")
    d = ops[0].shape[0] if ops[0].ndim == 2 else -1
    for a, k in enumerate(ops):
        if k.ndim != 2 or k.shape != (d, d):
            raise ContractViolation(f"Kraus operator {a} has shape {k.shape}, expected ({d}, {d})")
        if not np.all(np.isfinite(k)):
            raise ContractViolation(f"Kraus operator {a} has non-finite entries")
    return ops


def check_completeness(ops: Sequence[np.ndarray], tol: float = COMPLETENESS_TOL) -> float:
    """Raise unless ``sum_a K_a^H K_a = I`` within ``tol``; return the deviation."""
    d = ops[0].shape[1]
    total = sum(k.conj().T @ k for k in ops)
    dev = float(np.max(np.abs(total - np.eye(d))))
    if dev > tol:
        raise InvariantViolation(
            "completeness", f"not trace preserving: max |sum K^H K - I| = {dev:.3e}"
        )
    return dev


def _complete_map(f: np.ndarray, support: np.ndarray) -> np.ndarray:
    used = set(f[support].tolist())
    spare = iter(t for t in range(f.size) if t not in used)
    out = f.copy()
    for i in np.nonzero(~support)[0]:
        out[i] = next(spare, 0)
    return out


def validate_incoherent(kraus) -> IncoherentChannel:
    """Check a Kraus set is complete and incoherent, and extract ``c`` and ``f``.

    Raises:
        ContractViolation: for non-square, mismatched or non-finite operators.
        InvariantViolation: ``"completeness"`` if the set is not trace
            preserving, ``"incoherent"`` if some column has two or more
            entries above ``1e-12`` in magnitude.
    """
    ops = _check_kraus_shapes(kraus)
    check_completeness(ops)
    coeffs, maps = [], []
    for a, k in enumerate(ops):
        nonzero = np.abs(k) > KRAUS_ZERO_TOL
        counts = nonzero.sum(axis=0)
        bad = np.nonzero(counts > 1)[0]
        if bad.size:
            raise InvariantViolation(
                "incoherent",
                f"coherent Kraus operator: operator {a} has {counts[bad[0]]} nonzero "
                f"entries in column {bad[0]}",
            )
        support = counts == 1
        f = np.where(support, np.argmax(nonzero, axis=0), 0)
        c = k[f, np.arange(k.shape[1])] * support
        maps.append(_complete_map(f, support))
        coeffs.append(c)
    return IncoherentChannel(
        kraus=tuple(_frozen(k) for k in ops),
        coeffs=tuple(_frozen(c) for c in coeffs),
        maps=tuple(np.array(f, dtype=np.int64) for f in maps),
    )


class MeasurementOutcome(NamedTuple):
    outcome_index: int
    probability: float
    post_state: DensityMatrix | None  # None when the outcome has probability <= 1e-12


def local_operator(op: np.ndarray, dims: Sequence[int], slot: int) -> np.ndarray:
    """Embed ``op`` acting on subsystem ``slot`` into the full space."""
    dims = tuple(dims)
    if not 0 <= slot < len(dims):
        raise ContractViolation(f"slot {slot} out of range for dims {dims}")
    if op.shape != (dims[slot], dims[slot]):
        raise ContractViolation(
            f"operator of shape {op.shape} does not act on subsystem {slot} of dimension {dims[slot]}"
        )
    before = prod(dims[:slot])
    after = prod(dims[slot + 1 :])
    return np.kron(np.kron(np.eye(before), op), np.eye(after))


def apply_kraus(rho, kraus: Sequence[np.ndarray], slot: int) -> list[MeasurementOutcome]:
    """Outcome probabilities and normalized post-states of a Kraus set on ``slot``."""
    rho = as_density(rho)
    out = []
    for a, k in enumerate(kraus):
        full = local_operator(np.asarray(k, dtype=complex), rho.dims, slot)
        unnorm = full @ rho.mat @ full.conj().T
        p = float(np.trace(unnorm).real)
        post = DensityMatrix._trusted(rho.dims, unnorm / p) if p > PROB_TOL else None
        out.append(MeasurementOutcome(a, max(p, 0.0), post))
    return out


def apply_channel(rho, ch: IncoherentChannel, slot: int) -> list[MeasurementOutcome]:
    """Apply an incoherent channel on ``slot``, one outcome per Kraus operator."""
    return apply_kraus(rho, ch.kraus, slot)


# ---------------------------------------------------------------------------
# quantum-incoherent states and the witness measurement


def _b_last(rho: DensityMatrix, b_slot: int) -> DensityMatrix:
    if rho.n_subsystems != 2:
        raise ContractViolation(f"expected a bipartite state, got dims {rho.dims}")
    if b_slot not in (0, 1):
        raise ContractViolation(f"b_slot must be 0 or 1, got {b_slot}")
    return rho if b_slot == 1 else permute_subsystems(rho, [1, 0])


def is_qi_state(rho, b_slot: int = 1) -> bool:
    """True iff dephasing B leaves ``rho`` unchanged within 1e-10."""
    return qi_defect(as_density(rho), b_slot) < INCOHERENT_TOL


def alice_blocks(rho: DensityMatrix) -> np.ndarray:
    """Blocks ``N[i, j]`` (operators on B) with ``rho = sum_ij |i><j| (x) N_ij``; B last."""
    d_a, d_b = rho.dims
    return rho.mat.reshape(d_a, d_b, d_a, d_b).transpose(0, 2, 1, 3)


def bob_state_after(blocks: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Bob's unnormalized state after Alice projects onto ``|u>``."""
    return np.einsum("i,j,ijkl->kl", u.conj(), u, blocks)


def _is_diagonal(m: np.ndarray) -> bool:
    off = m - np.diag(np.diag(m))
    return float(np.max(np.abs(off))) < INCOHERENT_TOL


@dataclass(frozen=True, eq=False)
class WitnessResult:
    """Alice's measurement that leaves Bob with coherence.

    ``alice_basis`` columns are the measurement vectors and
    ``outcome.outcome_index`` picks the column that was found.  ``branch``
    is ``"diagonal-block"`` when some ``N_ii`` is already coherent and
    ``"rotated-pair"`` when a rotated pair of basis vectors is needed.
    """

    found: bool
    alice_basis: np.ndarray | None = None
    outcome: MeasurementOutcome | None = None
    coherence_bits: float = 0.0
    branch: str | None = None
    pair: tuple[int, int] | None = None
    theta: float | None = None
    imaginary: bool | None = None

    @property
    def score(self) -> float:
        return self.outcome.probability * self.coherence_bits if self.found else 0.0


def _rotated_pair_basis(d: int, k: int, l: int, theta: float, imaginary: bool) -> np.ndarray:
    u = np.eye(d, dtype=complex)
    c, s = np.cos(theta), np.sin(theta)
    if imaginary:
        u[k, k], u[l, k] = c, 1j * s
        u[k, l], u[l, l] = 1j * s, c
    else:
        u[k, k], u[l, k] = c, s
        u[k, l], u[l, l] = -s, c
    return u


def _outcome(blocks, u: np.ndarray, index: int) -> tuple[MeasurementOutcome, float]:
    unnorm = bob_state_after(blocks, u[:, index])
    p = float(np.trace(unnorm).real)
    if p <= PROB_TOL:
        return MeasurementOutcome(index, max(p, 0.0), None), 0.0
    d_b = unnorm.shape[0]
    post = DensityMatrix._trusted((d_b,), unnorm / p)
    return MeasurementOutcome(index, p, post), relative_entropy_of_coherence(post)


def find_coherence_witness(rho, b_slot: int = 1, theta_steps: int = 32) -> WitnessResult:
    """Find a measurement for Alice after which Bob's state is coherent.

    Write ``rho = sum_ij |i><j| (x) N_ij`` with B last.  If some ``N_ii`` has
    off-diagonal entries, measuring A in the computational basis works and
    the smallest such ``i`` is returned.  Otherwise the first pair
    ``k < l`` with a coherent ``N_kl`` is rotated: the vectors
    ``cos t |k> + sin t |l>`` and ``cos t |k> + i sin t |l>`` are tried for
    ``t = j pi / theta_steps``, ``0 < t < pi/2``, and the one with the largest
    probability times coherence is returned (ties favour the real vector
    and the smaller angle).

    Returns ``found=False`` exactly when ``rho`` is quantum-incoherent.
    """
    rho = _b_last(as_density(rho), b_slot)
    if is_qi_state(rho):
        return WitnessResult(found=False)
    d_a = rho.dims[0]
    blocks = alice_blocks(rho)
    eye = np.eye(d_a, dtype=complex)

    for i in range(d_a):
        if not _is_diagonal(blocks[i, i]):
            outcome, bits = _outcome(blocks, eye, i)
            return WitnessResult(True, eye, outcome, bits, "diagonal-block", (i, i))

    pairs = [(k, l) for k in range(d_a) for l in range(k + 1, d_a) if not _is_diagonal(blocks[k, l])]
    k, l = pairs[0]
    best = None
    for j in range(1, theta_steps // 2):
        theta = j * np.pi / theta_steps
        for imaginary in (False, True):
            u = _rotated_pair_basis(d_a, k, l, theta, imaginary)
            outcome, bits = _outcome(blocks, u, k)
            score = outcome.probability * bits
            if best is None or score > best[0]:
                best = (score, WitnessResult(True, u, outcome, bits, "rotated-pair", (k, l), theta, imaginary))
    return best[1]


# ---------------------------------------------------------------------------
# assistance with a qubit on Bob's side


def _as_vector(psi) -> np.ndarray:
    if isinstance(psi, PureState):
        return np.asarray(psi.vec)
    return np.asarray(psi, dtype=complex).reshape(-1)


def mub_for_two_states(psi0, psi1) -> tuple[PureState, PureState]:
    """Orthonormal ``eta_+, eta_-`` unbiased with respect to both inputs.

    Inside ``span{psi0, psi1}`` with orthonormal frame ``e0 = psi0``,
    ``e1``, each state is a Bloch vector; ``psi0`` sits at the north pole.
    The eta pair is ``+/- m`` with ``m`` the normalized cross product of the
    two Bloch vectors, which lies on the equator, so
    ``eta_+/- = (e0 +/- e^{i phi} e1) / sqrt(2)``.  Parallel Bloch vectors
    fall back to ``m = x``.  When ``psi1`` is parallel to ``psi0``, ``e1`` is
    the computational basis vector with the smallest overlap with ``psi0``,
    orthogonalized.

    Raises:
        ContractViolation: if the states differ in length or live in
            dimension 1.
    """
    a, b = _as_vector(psi0), _as_vector(psi1)
    if a.shape != b.shape:
        raise ContractViolation(f"states have different dimensions: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise ContractViolation("an unbiased pair needs dimension at least 2")
    dims = psi0.dims if isinstance(psi0, PureState) else (n,)
    e0 = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    residual = b - np.vdot(e0, b) * e0
    if np.linalg.norm(residual) > 1e-12:
        e1 = residual / np.linalg.norm(residual)
    else:
        j = int(np.argmin(np.abs(e0)))
        e1 = np.zeros(n, dtype=complex)
        e1[j] = 1.0
        e1 = e1 - np.vdot(e0, e1) * e0
        e1 /= np.linalg.norm(e1)

    alpha, beta = np.vdot(e0, b), np.vdot(e1, b)
    # Bloch vector of psi1 in the (e0, e1) frame; psi0 is (0, 0, 1), so the
    # cross product (0,0,1) x n1 is (-n1_y, n1_x, 0)
    prod_ab = np.conj(alpha) * beta
    n1x, n1y = 2 * prod_ab.real, 2 * prod_ab.imag
    if np.hypot(n1x, n1y) > 1e-15:
        phi = float(np.arctan2(n1x, -n1y))
    else:
        phi = 0.0
    phase = np.exp(1j * phi)
    eta_plus = (e0 + phase * e1) / np.sqrt(2)
    eta_minus = (e0 - phase * e1) / np.sqrt(2)
    return PureState._trusted(dims, eta_plus), PureState._trusted(dims, eta_minus)


def complete_basis(columns: np.ndarray) -> np.ndarray:
    """Unitary whose leading columns are the given orthonormal ``columns``."""
    d, k = columns.shape
    q, _ = np.linalg.qr(np.hstack([columns, np.eye(d, dtype=complex)]))
    q = q[:, :d].copy()
    q[:, :k] = columns
    return q


class AssistanceRun(NamedTuple):
    outcomes: tuple[MeasurementOutcome, MeasurementOutcome]
    achieved_bits: float
    alice_basis: np.ndarray
    completion_probability: float


def qubit_assistance_protocol(psi, b_slot: int = 1) -> AssistanceRun:
    """Alice's unbiased measurement that gives Bob ``S(Delta(rho^B))`` bits.

    Expand ``|Psi> = sum_k sqrt(p_k) |psi_k>_A |k>_B`` and measure A in a
    basis starting with the unbiased pair of ``psi_0, psi_1``.  Both
    outcomes occur with probability 1/2 and leave Bob in a pure state with
    diagonal ``(p_0, p_1)``.  The remaining basis vectors complete Alice's
    measurement and have probability 0; their total is reported as
    ``completion_probability``.

    Raises:
        ContractViolation: if the state is not bipartite, B is not a qubit
            or A has dimension 1.
    """
    if not isinstance(psi, PureState):
        raise ContractViolation("qubit_assistance_protocol needs a PureState")
    if len(psi.dims) != 2 or b_slot not in (0, 1):
        raise ContractViolation(f"expected a bipartite state and b_slot in (0, 1), got dims {psi.dims}")
    if psi.dims[b_slot] != 2:
        raise ContractViolation(f"subsystem B must be a qubit, has dimension {psi.dims[b_slot]}")
    if b_slot == 0:
        psi = permute_subsystems(psi, [1, 0])
    d_a = psi.dims[0]
    if d_a < 2:
        raise ContractViolation("Alice needs dimension at least 2 to measure an unbiased pair")
    amp = np.asarray(psi.vec).reshape(d_a, 2)  # column k is sqrt(p_k) psi_k
    weights = np.sum(np.abs(amp) ** 2, axis=0)
    present = weights > 1e-14
    cols = [amp[:, k] / np.sqrt(weights[k]) if present[k] else None for k in range(2)]
    psi0 = cols[0] if cols[0] is not None else cols[1]
    psi1 = cols[1] if cols[1] is not None else cols[0]

    eta_plus, eta_minus = mub_for_two_states(psi0, psi1)
    basis = complete_basis(np.stack([eta_plus.vec, eta_minus.vec], axis=1))

    outcomes = []
    achieved = 0.0
    for idx in range(2):
        bob = basis[:, idx].conj() @ amp
        p = float(np.vdot(bob, bob).real)
        post = PureState._trusted((2,), bob / np.sqrt(p)).density() if p > PROB_TOL else None
        outcomes.append(MeasurementOutcome(idx, p, post))
        if post is not None:
            achieved += p * relative_entropy_of_coherence(post)
    rest = basis[:, 2:].conj().T @ amp
    completion = float(np.sum(np.abs(rest) ** 2))
    return AssistanceRun(tuple(outcomes), achieved, basis, completion)


class LocalizationResult(NamedTuple):
    rate_bits: float
    outcomes: tuple[MeasurementOutcome, MeasurementOutcome]
    achieved_bits: float


def localize_coherence(psi, b_slot: int = -1) -> LocalizationResult:
    """Coherence localizable on a qubit B by all other parties acting jointly.

    The other parties are grouped into one system ``A_tot`` (in their
    original order) and :func:`qubit_assistance_protocol` is run across
    ``A_tot | B``.  ``rate_bits`` is the closed form ``S(Delta(rho^B))``;
    ``achieved_bits`` is what the simulated measurement delivers.
    """
    if not isinstance(psi, PureState):
        raise ContractViolation("localize_coherence needs a PureState")
    n = len(psi.dims)
    if n < 2:
        raise ContractViolation("localization needs at least two parties")
    b = b_slot % n
    if psi.dims[b] != 2:
        raise ContractViolation(f"subsystem B must be a qubit, has dimension {psi.dims[b]}")
    order = [i for i in range(n) if i != b] + [b]
    moved = permute_subsystems(psi, order)
    grouped = PureState._trusted((prod(moved.dims[:-1]), 2), moved.vec)
    rate = regularized_coa(partial_trace(grouped.density(), [1]))
    run = qubit_assistance_protocol(grouped, 1)
    return LocalizationResult(rate, run.outcomes, run.achieved_bits)


# ---------------------------------------------------------------------------
# the dimension-4 counterexample


def counterexample_state() -> PureState:
    """``(|0,0> + |1,1> + |+,2> + |+^,3>)/2`` on 2 x 4 with ``|+^> = (|+> + i|1>)/sqrt(2)``."""
    plus = np.array([1, 1]) / np.sqrt(2)
    plus_hat = (plus + 1j * np.array([0, 1])) / np.sqrt(2)
    alice = [np.array([1, 0]), np.array([0, 1]), plus, plus_hat]
    amp = np.stack(alice, axis=1) / 2  # (2, 4): column k is psi_k / 2
    return PureState((2, 4), amp.reshape(-1))


def _hermitian_2x2(params) -> np.ndarray:
    m00, m11, x, y = params
    return np.array([[m00, x + 1j * y], [x - 1j * y, m11]])


def _linear_map_matrix(fn, n_params: int) -> np.ndarray:
    # columns are fn(e_k) flattened to real coordinates; fn must be linear
    cols = []
    for k in range(n_params):
        e = np.zeros(n_params)
        e[k] = 1.0
        v = np.asarray(fn(e), dtype=complex).reshape(-1)
        cols.append(np.concatenate([v.real, v.imag]))
    return np.stack(cols, axis=1)


class NonAdditivityCertificate(NamedTuple):
    state: PureState
    reduced_state: DensityMatrix
    forced_zero: bool
    smallest_singular_value: float
    overlap_nullity: int
    overlap_null_is_identity: bool
    reduced_rank: int
    regularized_bits: float
    ca_upper_report: RoofResult


def nonadditivity_certificate(config: RoofConfig | None = None) -> NonAdditivityCertificate:
    """Certify that Bob's reduced state of :func:`counterexample_state` has ``C_a < 2``.

    A decomposition reaching 2 bits would need an Alice operator
    ``M >= 0`` with ``Tr_A[(M (x) I) Psi] = p |Phi_4><Phi_4|``.  That
    condition is a real linear system in the four parameters of a
    Hermitian ``M`` and ``p``; ``forced_zero`` is true when its smallest
    singular value exceeds 1e-12, so ``M = 0`` and ``p = 0`` is the only
    solution.

    The weaker requirement that Bob's post-state has equal diagonal
    entries (any maximally coherent state, whatever its phases) only
    forces ``M`` to be a multiple of the identity: ``overlap_nullity`` is 1
    and the null direction is the identity.  Such an ``M`` leaves Bob with
    ``rho^B`` itself, which is not pure (``reduced_rank`` is 2), so no
    member of a decomposition can carry 2 bits either way.

    The roof optimizer is run on ``rho^B`` (256 restarts unless ``config``
    says otherwise) and its value is reported as ``ca_upper_report``; it
    is an explicit ensemble, hence a certified lower bound on ``C_a``.
    """
    psi = counterexample_state()
    amp = np.asarray(psi.vec).reshape(2, 4)
    rho_b = partial_trace(psi.density(), [1])
    phi4 = np.full(4, 0.5, dtype=complex)

    def bob_unnormalized(params):
        m = _hermitian_2x2(params[:4])
        # Tr_A[(M (x) I)|Psi><Psi|]_{kl} = <psi_l|M|psi_k> / 4, with amp = psi / 2
        return amp.T @ m.T @ amp.conj()

    def full_system(params):
        return bob_unnormalized(params) - params[4] * np.outer(phi4, phi4.conj())

    sv = np.linalg.svd(_linear_map_matrix(full_system, 5), compute_uv=False)
    smallest = float(sv[-1])

    def overlaps(params):
        diag = np.real(np.diag(bob_unnormalized(np.append(params, 0.0))))
        return diag[1:] - diag[0]

    _, sv_diag, vh = np.linalg.svd(_linear_map_matrix(overlaps, 4))
    sv_diag = np.concatenate([sv_diag, np.zeros(4 - sv_diag.size)])
    null = sv_diag <= 1e-12
    nullity = int(np.sum(null))
    identity_dir = np.array([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2)
    null_is_identity = nullity == 1 and abs(abs(float(vh[-1] @ identity_dir)) - 1.0) < 1e-12

    rank = int(np.sum(eigvalsh(rho_b.mat) > 1e-12))
    cfg = config or RoofConfig(restarts=256)
    report = coherence_of_assistance(rho_b, cfg)
    return NonAdditivityCertificate(
        state=psi,
        reduced_state=rho_b,
        forced_zero=smallest > 1e-12,
        smallest_singular_value=smallest,
        overlap_nullity=nullity,
        overlap_null_is_identity=bool(null_is_identity),
        reduced_rank=rank,
        regularized_bits=regularized_coa(rho_b),
        ca_upper_report=report,
    )
