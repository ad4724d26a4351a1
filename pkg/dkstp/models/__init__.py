"""
Domain types for the DK-STP compressed sensing toolkit.
"""

from .models import (
    BlockLayout,
    BlockReport,
    CompressedPacket,
    ErrorDecomposition,
    ErrorMap,
    GrayImage,
    GroupSumSignal,
    IntraGroupResult,
    Matrix,
    MatrixDescriptor,
    MatrixKind,
    Method,
    NoiseSpec,
    QualityReport,
    ReconstructionReport,
    RipEstimate,
    RipMode,
    Scaling,
    SensingScheme,
    Signal,
    SolveReport,
    SolverConfig,
    SolverKind,
    SparkResult,
    UniquenessBounds,
)

__all__ = [
    "BlockLayout",
    "BlockReport",
    "CompressedPacket",
    "ErrorDecomposition",
    "ErrorMap",
    "GrayImage",
    "GroupSumSignal",
    "IntraGroupResult",
    "Matrix",
    "MatrixDescriptor",
    "MatrixKind",
    "Method",
    "NoiseSpec",
    "QualityReport",
    "ReconstructionReport",
    "RipEstimate",
    "RipMode",
    "Scaling",
    "SensingScheme",
    "Signal",
    "SolveReport",
    "SolverConfig",
    "SolverKind",
    "SparkResult",
    "UniquenessBounds",
]
