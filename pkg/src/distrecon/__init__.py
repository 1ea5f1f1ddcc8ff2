"""Reconstruction of point configurations from partially revealed distances."""

from .geometry import (
    DegenerateBasis,
    EmptyInput,
    GramMatrix,
    InconsistentDistances,
    NonEuclidean,
    PointConfig,
    RankTooHigh,
    SquaredDistanceMatrix,
    Tolerance,
    affine_dimension,
    embed_from_distances,
    gram_from_distances,
    is_independent,
    is_positive_definite,
    project_onto_span,
    recover_missing_distance,
)
from .percolation import (
    GadgetDescriptor,
    PollutionSet,
    SimpleGraph,
    build_gadget,
    closure,
    estimate_percolation_probability,
    polluted_closure,
)
from .reconstruct import (
    ClosureLog,
    DistanceState,
    InconsistencyDetected,
    NegativeResidual,
    ReductionStep,
    ZeroConflict,
    extract_reconstructible_clique,
    geometric_closure,
    merge_duplicates,
    recover_projection,
    reduce_dimension,
    run_pipeline,
)
from .simulate import (
    InstanceSpec,
    RevealPlan,
    TooLarge,
    dependent_family_count,
    find_dense_subspace,
    generate,
    reveal,
)
from .harness import (
    ScanResult,
    TrialReport,
    Unbracketed,
    emit,
    eta,
    p_star,
    run_trials,
    scan_threshold,
)

__version__ = "0.1.0"
