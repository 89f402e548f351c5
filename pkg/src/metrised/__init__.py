"""Numerical analysis of commutative metrised algebras: idempotents, minimality, spin factors."""
from .algebra import (
    AlgebraSpec,
    ValidationReport,
    find_unit,
    inner,
    left_mult_matrix,
    multiply,
    validate,
)
from .constructions import SpinFactorModel, direct_sum, rsquare, spin_factor, sym_jordan
from .search import (
    IdempotentRecord,
    SearchConfig,
    cubic_form,
    enumerate_idempotents,
    normalize,
)

__all__ = [
    "AlgebraSpec", "ValidationReport", "find_unit", "inner", "left_mult_matrix", "multiply",
    "validate", "SpinFactorModel", "direct_sum", "rsquare", "spin_factor", "sym_jordan",
    "IdempotentRecord", "SearchConfig", "cubic_form", "enumerate_idempotents", "normalize",
]

__version__ = "0.1.0"
