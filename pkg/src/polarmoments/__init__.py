"""Polarization moment structure of two-mode quantum light.

The package works manifold by manifold: a state is a weighted family of
density blocks, one per total photon number, and every quantity (Stokes
vector, moment packs, covariance, scans, reconstructions) is computed
either conditioned on one manifold or averaged over the excitation
distribution.
"""

__version__ = "1.0.0"

from .errors import (FileFormatError, PolarimetryError, RankDeficiencyError,
                     StateSpecError, StateValidationError)
from .fock import (DEFAULT_TAIL_MASS, ManifoldDensity, PolarizationState,
                   build_state, coherent, fock, manifold_state, mixture,
                   normalize_manifold, state_digest, su2_coherent,
                   su2_invariant, thermal, unpolarized, validate)
from .stokes import (Direction, RotationOperator, StokesOperators,
                     normal_ordering_residual, rotate_state,
                     rotate_state_about, rotation_about,
                     rotation_to_direction, stokes_operators)
from .grids import (great_circle_cut, icosphere, latlong, parse_grid,
                    to_directions)
from .moments import (Covariance, MomentTensors, SphereScan,
                      UncertaintyBounds, averaged_moments, central_moment,
                      covariance, manifold_moments, moment_tensors,
                      multi_indices, pack_size, raw_moment, scan_from_packs,
                      sphere_scan, stokes_vector, uncertainty_bounds)
from .tomography import (CANONICAL_2, CANONICAL_3, CANONICAL_3_NESTED,
                         DesignMatrix, DirectionSet, MisalignmentFit,
                         MomentObservations, ParameterCounts,
                         ReconstructionResult, canonical_directions,
                         design_matrix, misalignment_fit,
                         named_direction_set, parameter_counts, reconstruct)
from .experiment import (DetectorConfig, EFFICIENCY_PRESETS,
                         OutcomeDistribution, ProtocolResult, calibrate,
                         expected_counts, outcome_distribution, run_protocol,
                         sample_counts)
from .classify import (IsotropyReport, classify3, isotropy_floor_scan,
                       isotropy_test, minimal_variance_candidate, purity_scan,
                       sample_unpol_family, unpol_family)
from .io import (dump_report, load_detector_config, load_state_spec,
                 parse_counts, parse_observations, parse_scan,
                 write_counts, write_observations, write_scan)

__all__ = [
    "CANONICAL_2", "CANONICAL_3", "CANONICAL_3_NESTED", "Covariance",
    "DEFAULT_TAIL_MASS", "DesignMatrix", "DetectorConfig", "Direction",
    "DirectionSet", "EFFICIENCY_PRESETS", "FileFormatError",
    "IsotropyReport", "ManifoldDensity", "MisalignmentFit",
    "MomentObservations", "MomentTensors", "OutcomeDistribution",
    "ParameterCounts", "PolarimetryError", "PolarizationState",
    "ProtocolResult", "RankDeficiencyError", "ReconstructionResult",
    "RotationOperator", "SphereScan", "StateSpecError",
    "StateValidationError", "StokesOperators", "UncertaintyBounds",
    "averaged_moments", "build_state", "calibrate", "canonical_directions",
    "central_moment", "classify3", "coherent", "covariance",
    "design_matrix", "dump_report", "expected_counts", "fock",
    "great_circle_cut", "icosphere", "isotropy_floor_scan", "isotropy_test",
    "latlong", "load_detector_config", "load_state_spec", "manifold_moments",
    "manifold_state", "minimal_variance_candidate", "misalignment_fit",
    "mixture", "moment_tensors", "multi_indices", "named_direction_set",
    "normal_ordering_residual", "normalize_manifold", "outcome_distribution",
    "pack_size", "parameter_counts", "parse_counts", "parse_grid",
    "parse_observations", "parse_scan", "purity_scan", "raw_moment",
    "reconstruct", "rotate_state", "rotate_state_about", "rotation_about",
    "rotation_to_direction", "run_protocol", "sample_counts", "scan_from_packs",
    "sample_unpol_family", "sphere_scan", "state_digest", "stokes_operators",
    "stokes_vector", "su2_coherent", "su2_invariant", "thermal",
    "to_directions", "uncertainty_bounds", "unpol_family", "unpolarized",
    "validate", "write_counts", "write_observations", "write_scan",
]
