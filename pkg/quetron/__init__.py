"""quetron - quantum and kinetic models of excitation transfer networks.

This package builds the Lindblad generator of a single-exciton network in
real packed coordinates, reduces it to classical kinetic rate matrices by
eliminating the coherences, and measures how far the reduced models are
from the quantum dynamics, including numerical checks of the analytic
error bounds.
"""

__version__ = "0.1.0"

# Value types and errors (numpy and pydantic only)
from quetron.errors import (
    ConfigurationError,
    DegenerateSpectrumError,
    IllConditionedError,
    InsufficientDataError,
    QuetronError,
    SingularRateError,
    SpecValidationError,
)
from quetron.models import (
    BoundReport,
    DensityVector,
    KineticMatrix,
    LiouvillianBlocks,
    NetworkSpec,
    RelaxationMetrics,
    ScalingFamily,
)

_LAZY = {
    "assemble_blocks": "quetron.liouvillian",
    "compute_N": "quetron.kinetic",
    "compute_N0": "quetron.kinetic",
    "relaxation_metrics": "quetron.analysis",
    "efficiency": "quetron.analysis",
    "compute_bound_report": "quetron.bounds",
    "load_spec": "quetron.network",
}


# Solver entry points, imported on first use
def __getattr__(name):
    if name in _LAZY:
        from importlib import import_module
        return getattr(import_module(_LAZY[name]), name)
    raise AttributeError(f"module 'quetron' has no attribute '{name}'")


__all__ = [
    "BoundReport",
    "ConfigurationError",
    "DegenerateSpectrumError",
    "DensityVector",
    "IllConditionedError",
    "InsufficientDataError",
    "KineticMatrix",
    "LiouvillianBlocks",
    "NetworkSpec",
    "QuetronError",
    "RelaxationMetrics",
    "ScalingFamily",
    "SingularRateError",
    "SpecValidationError",
    *_LAZY,
]
