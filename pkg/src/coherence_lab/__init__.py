"""Assisted coherence distillation: measures, roof optimization and protocol simulation."""

from .errors import ContractViolation, InvariantViolation, StateParseError
from .linalg import Spectrum, eigvalsh, hermitian_eig
from .maxcorr import (
    BlockDecomposition,
    SloccTrace,
    extract_blocks,
    lift_bipartite,
    make_step,
    run_protocol,
    simulate_lqicc_round_trip,
    simulate_slocc_step,
    to_maximally_correlated,
)
from .measures import (
    INFINITE,
    assistance_gain,
    binary_entropy,
    continuity_gap_check,
    qi_relative_entropy,
    regularized_coa,
    regularized_eoa,
    relative_entropy,
    relative_entropy_of_coherence,
    shannon_entropy,
    von_neumann_entropy,
)
from .protocols import (
    IncoherentChannel,
    MeasurementOutcome,
    WitnessResult,
    apply_channel,
    find_coherence_witness,
    is_qi_state,
    localize_coherence,
    mub_for_two_states,
    nonadditivity_certificate,
    qubit_assistance_protocol,
    validate_incoherent,
)
from .roof import (
    Ensemble,
    RoofConfig,
    RoofResult,
    coherence_of_assistance,
    coherence_of_formation,
    entanglement_of_assistance,
    entanglement_of_formation,
    roof_optimize,
)
from .sampling import DEFAULT_SEED, random_density_matrix, random_pure_state, rng_from_seed
from .states import (
    DensityMatrix,
    PureState,
    basis_state,
    dephase,
    maximally_coherent,
    partial_trace,
    purify,
    tensor,
    trace_distance,
)

__version__ = "0.1.0"
