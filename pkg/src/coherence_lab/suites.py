"""Seeded verification suites behind ``coherence-lab verify``.

Case ``k`` of every suite draws its randomness from ``seed + k``, so a case
can be rerun on its own and the aggregate does not depend on the order in
which cases are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .maxcorr import simulate_slocc_step, to_maximally_correlated
from .measures import continuity_gap_check, qi_defect, regularized_coa, relative_entropy_of_coherence
from .protocols import (
    find_coherence_witness,
    localize_coherence,
    nonadditivity_certificate,
    qubit_assistance_protocol,
    validate_incoherent,
)
from .roof import RoofConfig, coherence_of_assistance, entanglement_of_assistance
from .sampling import (
    random_density_matrix,
    random_incoherent_kraus,
    random_pure_state,
    rng_from_seed,
)
from .states import DensityMatrix, dephase, partial_trace


@dataclass
class SuiteResult:
    suite: str
    cases_run: int = 0
    cases_passed: int = 0
    worst_deviation: float = 0.0
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases_passed == self.cases_run

    def add(self, passed: bool, deviation: float, **info) -> None:
        self.cases_run += 1
        self.cases_passed += int(passed)
        self.worst_deviation = max(self.worst_deviation, float(deviation))
        self.details.append({"case": self.cases_run - 1, "passed": bool(passed), "deviation": float(deviation), **info})

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "cases_run": self.cases_run,
            "cases_passed": self.cases_passed,
            "worst_deviation": self.worst_deviation,
            "passed": self.passed,
            "details": self.details,
        }


@dataclass(frozen=True)
class SuiteOptions:
    cases: int | None = None
    seed: int = 0
    restarts: int | None = None
    tol: float = 1e-9


def _roof_config(opts: SuiteOptions, default_restarts: int, seed: int) -> RoofConfig:
    return RoofConfig(restarts=opts.restarts or default_restarts, tol=opts.tol, seed=seed)


def random_non_qi_state(rng, dims) -> DensityMatrix:
    """Random full-rank state, redrawn until dephasing B changes it."""
    while True:
        rho = random_density_matrix(rng, dims)
        if qi_defect(rho) > 1e-6:
            return rho


def suite_thm1(opts: SuiteOptions) -> SuiteResult:
    """Witness measurement for non-QI states and none for their dephased versions."""
    res = SuiteResult("thm1")
    for k in range(opts.cases or 200):
        rng = rng_from_seed(opts.seed + k)
        dims = (2, 2) if k % 2 == 0 else (2, 3)
        rho = random_non_qi_state(rng, dims)
        w = find_coherence_witness(rho)
        qi = dephase(rho, [1])
        w_qi = find_coherence_witness(qi)
        ok = w.found and w.score > 1e-9 and w.outcome.probability > 1e-9 and not w_qi.found
        res.add(ok, qi_defect(qi), dims=list(dims), score=w.score, branch=w.branch)
    return res


def suite_thm5_qubit(opts: SuiteOptions) -> SuiteResult:
    """Unbiased-measurement protocol on random pure ``d_A x 2`` states."""
    res = SuiteResult("thm5-qubit")
    for k in range(opts.cases or 500):
        rng = rng_from_seed(opts.seed + k)
        d_a = 2 + k % 3
        psi = random_pure_state(rng, (d_a, 2))
        target = regularized_coa(partial_trace(psi.density(), [1]))
        run = qubit_assistance_protocol(psi)
        coh = max(abs(relative_entropy_of_coherence(o.post_state) - target) for o in run.outcomes)
        prob = max(abs(o.probability - 0.5) for o in run.outcomes)
        ok = coh <= 1e-8 and prob <= 1e-9
        res.add(ok, max(coh, prob), d_a=d_a, target_bits=target, coherence_error=coh, probability_error=prob)
    return res


def suite_eq10_mc(opts: SuiteOptions) -> SuiteResult:
    """Coherence of assistance against entanglement of assistance of the correlated image.

    Two thirds of the cases are qubits and the rest qutrits; both roofs
    run with the same optimizer settings.
    """
    res = SuiteResult("eq10-mc")
    n = opts.cases or 150
    n_qubits = (2 * n + 2) // 3
    for k in range(n):
        rng = rng_from_seed(opts.seed + k)
        d = 2 if k < n_qubits else 3
        rho = random_density_matrix(rng, (d,))
        cfg = _roof_config(opts, 32, opts.seed + k)
        ca = coherence_of_assistance(rho, cfg)
        ea = entanglement_of_assistance(to_maximally_correlated(rho), cfg)
        dev = abs(ca.value - ea.value)
        res.add(dev < 2e-5, dev, d=d, coa_bits=ca.value, eoa_bits=ea.value)
    return res


def continuity_pair(rng, dims) -> tuple[DensityMatrix, DensityMatrix]:
    """``rho`` and ``(1 - e) rho + e tau`` with ``e`` log-uniform on ``[1e-4, 1]``."""
    d = int(np.prod(dims))
    rho = random_density_matrix(rng, dims, rank=int(rng.integers(1, d + 1)))
    tau = random_density_matrix(rng, dims, rank=int(rng.integers(1, d + 1)))
    eps = 10 ** rng.uniform(-4, 0)
    return rho, DensityMatrix._trusted(dims, (1 - eps) * rho.mat + eps * tau.mat)


CONTINUITY_DIMS = {2: (1, 2), 4: (2, 2), 6: (2, 3)}


def suite_continuity(opts: SuiteOptions, total_dims=(2, 4, 6)) -> SuiteResult:
    """Continuity bound on random pairs; ``cases`` pairs per total dimension."""
    res = SuiteResult("continuity")
    n = opts.cases or 1000
    k = 0
    for total in total_dims:
        dims = CONTINUITY_DIMS[total]
        for _ in range(n):
            rng = rng_from_seed(opts.seed + k)
            k += 1
            rho, sigma = continuity_pair(rng, dims)
            chk = continuity_gap_check(rho, sigma)
            res.add(chk.holds, max(chk.lhs - chk.rhs, 0.0), dims=list(dims), lhs=chk.lhs, rhs=chk.rhs,
                    trace_distance=chk.trace_distance, in_regime=chk.in_regime)
    return res


def suite_counterexample(opts: SuiteOptions) -> SuiteResult:
    """Exact certificate plus the optimizer's value on the dimension-4 state."""
    res = SuiteResult("counterexample")
    cert = nonadditivity_certificate(_roof_config(opts, 256, opts.seed))
    value = cert.ca_upper_report.value
    reg_err = abs(cert.regularized_bits - 2.0)
    ok = cert.forced_zero and reg_err <= 1e-12 and value < 2 - 1e-3
    res.add(
        ok,
        reg_err,
        forced_zero=cert.forced_zero,
        smallest_singular_value=cert.smallest_singular_value,
        overlap_nullity=cert.overlap_nullity,
        overlap_null_is_identity=cert.overlap_null_is_identity,
        reduced_rank=cert.reduced_rank,
        regularized_bits=cert.regularized_bits,
        optimizer_bits=value,
        restarts_used=cert.ca_upper_report.restarts_used,
    )
    return res


def suite_slocc(opts: SuiteOptions) -> SuiteResult:
    """Probability identity and lift commutation for random single Bob steps."""
    res = SuiteResult("slocc")
    for k in range(opts.cases or 200):
        rng = rng_from_seed(opts.seed + k)
        dims = (2, 2) if k % 2 == 0 else (2, 3)
        rho = random_density_matrix(rng, dims)
        injective = (True, False, None)[k % 3]
        ch = validate_incoherent(random_incoherent_kraus(rng, dims[1], 2, injective=injective))
        alpha = int(rng.integers(len(ch)))
        tr = simulate_slocc_step(rho, ch, alpha)
        if tr.aborted:
            ok = tr.q_alpha > 0 or tr.p_alpha < 1e-14
            res.add(ok, 0.0, dims=list(dims), alpha=alpha, aborted=True)
            continue
        ident = abs(tr.ancilla_prob * tr.q_alpha * tr.d_b - tr.p_alpha)
        ok = ident < 1e-12 and tr.lift_deviation < 1e-10 and tr.q_alpha > 0
        if tr.deterministic_path:
            ok = ok and tr.success_prob == 1.0
        else:
            ok = ok and tr.success_prob == tr.ancilla_prob
        res.add(ok, max(ident, tr.lift_deviation), dims=list(dims), alpha=alpha, p_alpha=tr.p_alpha,
                q_alpha=tr.q_alpha, success_prob=tr.success_prob, deterministic_path=tr.deterministic_path)
    return res


def random_party_dims(rng, parties: int) -> tuple[int, ...]:
    """Dimensions 2 or 3 for the assisting parties followed by the qubit target."""
    return tuple(int(d) for d in rng.integers(2, 4, size=parties - 1)) + (2,)


def suite_thm6(opts: SuiteOptions) -> SuiteResult:
    """Localization on random pure 3- and 4-party states with a qubit target."""
    res = SuiteResult("thm6")
    for k in range(opts.cases or 100):
        rng = rng_from_seed(opts.seed + k)
        dims = random_party_dims(rng, 3 + k % 2)
        psi = random_pure_state(rng, dims)
        loc = localize_coherence(psi)
        dev = max(abs(relative_entropy_of_coherence(o.post_state) - loc.rate_bits) for o in loc.outcomes)
        dev = max(dev, abs(loc.achieved_bits - loc.rate_bits))
        res.add(dev <= 1e-8, dev, dims=list(dims), rate_bits=loc.rate_bits)
    return res


SUITES: dict[str, Callable[[SuiteOptions], SuiteResult]] = {
    "thm1": suite_thm1,
    "thm5-qubit": suite_thm5_qubit,
    "eq10-mc": suite_eq10_mc,
    "continuity": suite_continuity,
    "counterexample": suite_counterexample,
    "slocc": suite_slocc,
    "thm6": suite_thm6,
}


def run_suite(name: str, opts: SuiteOptions) -> SuiteResult:
    return SUITES[name](opts)
