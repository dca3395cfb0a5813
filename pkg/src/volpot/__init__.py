"""High-order cubature of advection-diffusion volume potentials over boxes."""

from .cubature import (
    Box,
    ConvergenceRow,
    Grid,
    SeparatedDensity,
    SharedFactorDensity,
    convergence_table,
    evaluate_potential,
    grid_index,
    interior_convolution,
    partition,
    potential_parts,
    quasi_interpolant,
    test_density,
)
from .errors import AccuracyNotMetError, DomainError, OutOfReachError, SingularSystemError
from .extension import HestenesScheme, hestenes_extend, hestenes_solve, named_scheme
from .oracle import PROFILES, brute_force_potential, exact_potential_product, kernel_closed_form
from .quadrature import (
    HIGH_DIM,
    LITERAL_3D,
    TABLES_3D,
    LambdaSquared,
    QuadratureParams,
    a_coeff,
    b_coeff,
    trapezoid_weights,
)

__version__ = "0.1.0"
