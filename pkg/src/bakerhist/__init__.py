"""Consistent-histories analysis of the quantum baker's map under coarse-grained bit partitions."""

from .analytic import (
    Prediction,
    allowed_count,
    enumerate_allowed,
    predict,
    predicted_entropy,
    predicted_probability,
    regime,
    shift_allowed,
)
from .bakermap import (
    BakerParams,
    FrameTransform,
    baker_apply,
    baker_dense,
    basis_state,
    frame_apply,
    verify_unitarity,
)
from .bitcore import (
    BitString,
    CellLabel,
    CoarseGrainingSpec,
    HistoryLabel,
    binary_fraction,
    enumerate_cells,
    enumerate_histories,
    parse_spec,
    render_diagram,
)
from .errors import (
    AdvisoryWarning,
    BakerHistError,
    CapacityError,
    FrameMismatchError,
    InvariantViolation,
    NegativeProbabilityError,
    SpecError,
    UnsupportedRegimeWarning,
)
from .experiments import ExperimentConfig, run_sweep
from .hilbert import DenseOperator, StateVector
from .histories import (
    BranchTree,
    DecoherenceReport,
    EngineConfig,
    build_report,
    entropy,
    gram_offdiagonal,
    run_branch_tree,
    shift_support_check,
)
from .partitions import Partition, build_partition, initial_ensemble, project, verify_partition
from .refcheck import compare_engines, dense_decoherence_functional

__version__ = "0.1.0"
