"""Degenerate fully nonlinear elliptic operators built from horizontal frames.

The package models operators F(M, x) = G(sigma(x) M sigma(x)^T) for an m x n
frame matrix sigma, solves F(D^2 u, x) - c(x) u = f(x) on box grids with a
monotone directional scheme, and verifies the Holder-regularity ingredients
(matrix identities, doubling calculus, growth condition, fitted modulus).
"""

from .ccdist import cc_distance_estimate
from .doubling import (
    ConstantBundle,
    DoublingParams,
    growth_condition_margin,
    growth_margin_asymptotic,
    holder_constant_bound,
    phi_hessian_block,
    phi_hessian_square,
    sums_trace_bound,
    touching_pair,
)
from .fields import SmoothField, constant_field, polynomial_field
from .grids import Grid, GridFunction, from_callable, interpolate, to_csv, value_at
from .holder import (
    HolderReport,
    bundle_for_instance,
    fit_alpha,
    holder_seminorm,
    verify_theorem,
)
from .operators import (
    Coefficients,
    EllipticityBounds,
    OperatorSpec,
    degenerate_ellipticity_check,
    f_eval,
    g_eval,
    pucci_operator,
    sandwich_check,
    trace_operator,
)
from .solver import (
    DiscreteOperator,
    SolveConfig,
    SolveReport,
    directional_second_difference,
    discrete_operator,
    manufactured_rhs,
    solve,
    two_box_sensitivity,
)
from .structures import (
    CarnotStructure,
    engel_trace_operator,
    group_mul,
    lipschitz_sigma_estimate,
    p_matrix_at,
    preset,
    sigma_at,
    structure_from_json,
    trace_p,
)
from .symmat import (
    Spectrum,
    diagonal_lemma_falsifier,
    eigh,
    spectra_match_lemma,
    sqrt_psd,
    trace_identity_check,
)

__version__ = "0.1.0"
