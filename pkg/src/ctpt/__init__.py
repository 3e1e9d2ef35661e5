"""Numerical toolkit for a PT-symmetric oscillator with time-dependent mass.

The model is H(t) = p^2/(2 m0 alpha) + alpha m0 omega^2 x^2/2 + i sqrt(alpha) x.
A unitary frame change F(t) maps it onto the fixed PT-symmetric oscillator
H0pt = p^2/2m0 + m0 omega0^2 x^2/2 + i x, whose C operator provides the
conserved C(t)PT inner product.
"""
from .hermite import energy, hermite, operator_matrix, phi
from .model import (
    BasisExpansion,
    DomainWarning,
    GridWave,
    PhysicalParams,
    SpatialGrid,
    make_grid,
    project,
    synthesize,
)
from .profile import Regime, ScaleProfile, check_auxiliary, effective_frequency_sq, evaluate, rho_solve
from .propagate import TimeSeries, analytic_solution, apply_H, propagate_numeric
from .symmetry import (
    InnerProductKind,
    apply_parity,
    apply_time_reversal,
    build_C_matrix,
    build_U_matrix,
    inner_product,
)
from .transforms import TransformSpec, apply_F, apply_F1, apply_F2, verify_transformed_hamiltonian

__version__ = "0.1.0"
