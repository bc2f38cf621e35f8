"""Python interface of the double fibration transform toolkit."""

from ._dftomo import (
    ConsistencyError,
    FibrationSpec,
    GridFunction,
    MetricField,
    SinogramFunction,
    ValidationError,
    adjoint,
    backproject_lines,
    bolker_check,
    conjugate_scan,
    forward,
    fractional_laplacian,
    helgason_constant,
    lines_fibration,
    normal_apply,
    phantom,
    phantom_gaussian,
    radon_invert,
    structure_numbers,
    xray_fibration,
)

__all__ = [
    "ConsistencyError",
    "FibrationSpec",
    "GridFunction",
    "MetricField",
    "SinogramFunction",
    "ValidationError",
    "adjoint",
    "backproject_lines",
    "bolker_check",
    "conjugate_scan",
    "forward",
    "fractional_laplacian",
    "helgason_constant",
    "lines_fibration",
    "normal_apply",
    "phantom",
    "phantom_gaussian",
    "radon_invert",
    "structure_numbers",
    "xray_fibration",
]
