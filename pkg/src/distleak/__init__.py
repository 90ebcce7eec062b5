"""Distance-leaking authentication simulator and embedding-recovery attacks."""

from .embeddings import (
    Embedding,
    Metric,
    PopulationSpec,
    angle_between,
    distance,
    load_embedding_records,
    load_embeddings,
    normalize,
    save_embeddings,
    synth_population,
)
from .errors import (
    ArityError,
    CalibrationError,
    DegenerateGeometryError,
    DimensionMismatchError,
    DistleakError,
    DuplicateIdError,
    InfeasibleDistancesError,
    MalformedFileError,
    NonDiscriminatingProbeError,
    ProbeSpanError,
    RankDeficientError,
    UnderdeterminedError,
    UnknownIdError,
    ZeroVectorError,
)
from .exact import (
    L2System,
    NormQuadratic,
    RecoveryCandidates,
    build_l2_system,
    cosine_recover,
    disambiguate,
    dump_system,
    l2_recover,
    solve_norm_quadratic,
)
from .oracle import (
    AuthResponse,
    DisplayMode,
    EnrollmentDb,
    OracleConfig,
    TranscriptEntry,
    authenticate,
    display_transform,
    enroll,
    invert_display,
    load_oracle,
    load_transcript,
    save_oracle,
    save_transcript,
    transcript,
)
from .pipeline import (
    AttackReport,
    Observation,
    ObservationLog,
    Solver,
    SweepResult,
    collect,
    export_sweep_csv,
    load_sweep_csv,
    observations_from_transcript,
    run_attack,
    sweep,
)
from .crossdomain import (
    AffineCalibration,
    CrossDomainConfig,
    DomainMap,
    cross_domain_attack,
    fit_distance_calibration,
    make_cross_domain_config,
    sample_latents,
)
from .subspace import (
    RankErrorCurve,
    SvdBasis,
    fit_basis,
    load_basis,
    rank_error_curve,
    reduced_cosine_recover,
    reduced_l2_recover,
    save_basis,
)

__version__ = "0.1.0"
