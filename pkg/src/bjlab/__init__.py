"""Numerical laboratory for quasi-periodic block Jacobi operators.

Builds the operator from matrix-valued trigonometric polynomials, and checks
bounds on Dirichlet determinants, minors and Green's functions together with
numerical signatures of localization.
"""

from .errors import DomainError, NoGoodCircleError, ResourceError, SpectralHitError
from .operator import GOLDEN_MEAN, OperatorSpec, almost_mathieu, cosine_band, dirichlet_matrix
from .reports import BoundReport
from .torus import TrigMatrixPoly

__version__ = "0.1.0"

__all__ = [
    "DomainError", "NoGoodCircleError", "ResourceError", "SpectralHitError", "GOLDEN_MEAN",
    "OperatorSpec", "almost_mathieu", "cosine_band", "dirichlet_matrix", "BoundReport", "TrigMatrixPoly",
    "__version__",
]
