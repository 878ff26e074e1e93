"""Phase retrieval from time-frequency structured magnitude measurements.

The measurement frame is a Gabor system (all frequency shifts of a few
cyclic translates of a random window) extended with mixed vectors whose
magnitudes polarize the relative phases between frame coefficients.
Reconstruction propagates or synchronizes those phases over the measurement
graph and finishes with a dual-frame least-squares solve.
"""

from .analysis import (
    DeltaEstimate,
    ExperimentConfig,
    ExperimentRecord,
    OrderStatsReport,
    align_global_phase,
    delta_estimate,
    global_phase_error,
    order_statistics_experiment,
    run_experiment,
)
from .estimator import GaborPhaseRetrieval
from .gabor import (
    GaborFrame,
    Lattice,
    RankDeficientFrameError,
    dft,
    full_spark_check,
    idft,
    inner,
    least_squares_reconstruct,
    modulate,
    sample_window_gaussian,
    sample_window_uniform_sphere,
    stft_coefficients,
    time_freq_shift,
    translate,
)
from .graph import (
    MeasurementGraph,
    SpectrumSummary,
    adjacency_matrix,
    expansion_ratio,
    fourier_bias,
    largest_connected_component,
    normalized_spectral_gap,
    spectral_gap,
    spectral_gap_closed_form,
)
from .measurement import (
    DifferenceSet,
    EdgeSet,
    EmptyDifferenceSetError,
    MeasurementEnsemble,
    NoiseModel,
    build_difference_set,
    build_edge_set,
    edge_vector,
    mask_vector,
    measure,
)
from .polarization import (
    ComponentTooSmallError,
    PropagationState,
    RelativePhase,
    measurement_graph,
    propagate_phases,
    reconstruct_noiseless,
    relative_phase,
)
from .robust import (
    RobustDiagnostics,
    RobustParams,
    StageFailure,
    TrimParams,
    angular_synchronization,
    reconstruct_noisy,
    spectral_clustering,
    trim_vertices,
)

__version__ = "0.1.0"

__all__ = [
    "GaborPhaseRetrieval",
    "GaborFrame",
    "Lattice",
    "translate",
    "modulate",
    "time_freq_shift",
    "dft",
    "idft",
    "inner",
    "stft_coefficients",
    "sample_window_uniform_sphere",
    "sample_window_gaussian",
    "least_squares_reconstruct",
    "full_spark_check",
    "RankDeficientFrameError",
    "DifferenceSet",
    "EdgeSet",
    "EmptyDifferenceSetError",
    "MeasurementEnsemble",
    "NoiseModel",
    "build_difference_set",
    "build_edge_set",
    "edge_vector",
    "mask_vector",
    "measure",
    "MeasurementGraph",
    "SpectrumSummary",
    "adjacency_matrix",
    "fourier_bias",
    "spectral_gap",
    "spectral_gap_closed_form",
    "normalized_spectral_gap",
    "largest_connected_component",
    "expansion_ratio",
    "RelativePhase",
    "relative_phase",
    "measurement_graph",
    "PropagationState",
    "propagate_phases",
    "reconstruct_noiseless",
    "ComponentTooSmallError",
    "TrimParams",
    "RobustParams",
    "RobustDiagnostics",
    "StageFailure",
    "trim_vertices",
    "spectral_clustering",
    "angular_synchronization",
    "reconstruct_noisy",
    "global_phase_error",
    "align_global_phase",
    "OrderStatsReport",
    "order_statistics_experiment",
    "DeltaEstimate",
    "delta_estimate",
    "ExperimentConfig",
    "ExperimentRecord",
    "run_experiment",
]
