"""Scattering resonances of open quantum graphs with Kirchhoff vertex conditions."""

import os as _os

# QGRES_THREADS caps the BLAS/LAPACK pools; it must be set before numpy loads
_threads = _os.environ.get("QGRES_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .graph import (  # noqa: E402
    Bond,
    Edge,
    GraphClassParams,
    GraphError,
    ParameterError,
    QuantumGraph,
    ValidationReport,
    Vertex,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Bond", "Edge", "GraphClassParams", "GraphError", "ParameterError", "QuantumGraph",
    "ValidationReport", "Vertex", "validate", "__version__",
]
