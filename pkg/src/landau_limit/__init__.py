"""Relativistic Landau collision operators for a two-species plasma and their
classical (c -> inf) limit, on a discrete momentum grid.

Modules: bessel, maxwellian, kernel, sigma, operators, solver, cli.
"""
__version__ = "0.1.0"

from .errors import (DomainError, SingularPairError, AccuracyError, GridResolutionError,
                     InstabilityError)
from .bessel import bessel_k, bessel_k_scaled, bessel_ratio
from .maxwellian import Equilibrium, projection_constants, moment, normalization
from .kernel import phi, phi_relativistic, phi_classical, phi_difference_rate
from .grid import MomentumGrid
from .fields import SpeciesField, random_field, null_space_fields
from .sigma import sigma_matrix, sigma_eigenvalues, sigma_norm, WeightSpec
from .operators import apply_L, apply_Gamma, project
from .solver import RelaxationConfig, relax_linear, relax_nonlinear, classical_limit_rate
from .rates import RateFit
