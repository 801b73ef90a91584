"""Finite element solver for the corotational harmonic map heat flow on the unit disk."""

from hmhf.mesh import (
    FEFunction,
    FESpace,
    Mesh1D,
    QuadratureRule,
    ReferenceElement,
    build_mesh,
    evaluate,
    evaluate_derivative,
    gauss_rule,
)
from hmhf.assembly import (
    AssemblyConfig,
    BandedSpdMatrix,
    assemble_h1r,
    assemble_mass_r,
    assemble_nonlinear_load,
)
from hmhf.banded import CholeskyFactor, NotPositiveDefiniteError, factor, solve
from hmhf.energy import (
    EnergyBreakdown,
    ErrorReport,
    F_potential,
    energy,
    eoc,
    error_between,
    f_nonlin,
    galerkin_project,
    interpolate,
    inverse_estimate_ratio,
    norm_1r,
    norm_equivalence_constant,
    norm_h1r,
    norm_l2r,
    random_fe_function,
    rescale_to_energy,
    sup_bound_from_energy,
)
from hmhf.flow import (
    DivergedError,
    FlowTrace,
    Scheme,
    StepperConfig,
    run_flow,
    step_bdf2,
    step_semi_implicit,
)

__all__ = [name for name in dir() if not name.startswith("_")]
