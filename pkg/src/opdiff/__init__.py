"""Finite-section numerics for weighted composition-differentiation operators
on the Hardy space and the weighted Bergman spaces."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DomainError,
    HypothesisError,
    NoInteriorFixedPointError,
    OpDiffError,
    SelfMapError,
    SpecFormatError,
    TruncationError,
    ZeroFunctionError,
)
from .series import TruncatedSeries  # noqa: E402
from .space import SpaceParams  # noqa: E402
from .operator import OperatorSpec, OperatorMatrix, build_matrix, find_fixed_point  # noqa: E402
from .spectral import closed_form_spectrum, eigenvalues, operator_norm, spectral_radius_closed  # noqa: E402
from .bounds import exact_norm_bz, lower_bound_norm, upper_bound_norm  # noqa: E402
