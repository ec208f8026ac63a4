"""Fault-tree analysis, FT-to-BN compilation, and exact Bayesian inference."""

from .avmodel import AvCatalogEntry, builtin_av_tree, table1_reference
from .cutsets import (
    CutSetCollection,
    CutSetLimitError,
    minimal_cut_sets,
    order_histogram,
    single_points_of_failure,
)
from .experiment import (
    EventStatistics,
    ExperimentConfig,
    ExperimentReport,
    confidence_interval,
    report_from_json,
    run_experiment,
    subsystem_rollup,
)
from .inference import (
    EnumerationCapError,
    InconsistentEvidenceError,
    InferenceError,
    PosteriorReport,
    enumerate_marginal,
    joint_probability,
    marginal,
    posterior_all,
)
from .network import (
    BayesianNetwork,
    Cpt,
    CptSizeError,
    cpt_for_gate,
    network_to_json,
    to_bayesian_network,
)
from .quant import (
    PropagationResult,
    RateAssignment,
    allocate_budget,
    probability_to_rate,
    propagate,
    rate_to_probability,
)
from .tree import (
    Event,
    EventKind,
    FaultTree,
    FaultTreeError,
    FaultTreeParseError,
    Finding,
    Gate,
    GateKind,
    InvalidTreeError,
    Severity,
    ValidationReport,
    parse_fault_tree,
    tree_to_json,
    tree_to_text,
    validate,
)

__version__ = "0.1.0"
