"""Mirror-symmetry detection via reflect-and-register."""

from ._core import (
    DegenerateInputError,
    DetectionError,
    DimensionMismatchError,
    Hyperplane,
    MsrError,
    PairingResult,
    ParseError,
    RegistrationResult,
    RigidTransform,
    RunDiagnostic,
    SkeletonPair,
    SymmetryDetection,
    SymmetrySegment,
    __version__,
    detect_symmetry_2d,
    detect_symmetry_points,
    dtw_cost,
    gradient_magnitude,
    icp_register,
    line_to_segment,
    nxc_register,
    pair_skeletons,
    reflect_points,
    symmetry_plane_from_registration,
)

__all__ = [
    "DegenerateInputError",
    "DetectionError",
    "DimensionMismatchError",
    "Hyperplane",
    "MsrError",
    "PairingResult",
    "ParseError",
    "RegistrationResult",
    "RigidTransform",
    "RunDiagnostic",
    "SkeletonPair",
    "SymmetryDetection",
    "SymmetrySegment",
    "__version__",
    "detect_symmetry_2d",
    "detect_symmetry_points",
    "dtw_cost",
    "gradient_magnitude",
    "icp_register",
    "line_to_segment",
    "nxc_register",
    "pair_skeletons",
    "reflect_points",
    "symmetry_plane_from_registration",
]
