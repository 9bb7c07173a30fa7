"""Indetermination couplings, their copulas, and the indeterminacy test."""

__version__ = "0.1.0"

from .errors import (CompatibilityError, DegenerateError, DomainError, IndetError,
                     IntegrabilityError, NumericalError)
from .margins import (Histogram, Linear, Power, Uniform, check_compatibility,
                      constructive_compose, constructive_decompose, linear_pair, spike_pair)
from .coupling import (couple_fgm, couple_independence, couple_indetermination,
                       couple_perturbation)
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, RngStream
