"""Numerical toolkit for real twisted spectral triples, their twisted
fluctuations, gauge transformations and self-adjointness certificates."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .opcore import (AntilinearOp, LinearOp, Tolerance, compose_antilinear,  # noqa: E402
                     conjugate_by, norm, residual, twisted_commutator)
from .algebra import (AlgebraElement, Automorphism, Representation, StarAlgebra,  # noqa: E402
                      apply_automorphism, check_regular, opposite_element, rho_opposite)
from .triple import (KOSignature, RealTwistedTriple, ValidationReport,  # noqa: E402
                     twisted_first_order_residual, validate_triple)

__all__ = [
    "AntilinearOp", "LinearOp", "Tolerance", "compose_antilinear", "conjugate_by", "norm",
    "residual", "twisted_commutator", "AlgebraElement", "Automorphism", "Representation",
    "StarAlgebra", "apply_automorphism", "check_regular", "opposite_element", "rho_opposite",
    "KOSignature", "RealTwistedTriple", "ValidationReport", "twisted_first_order_residual",
    "validate_triple",
]
