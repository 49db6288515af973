"""Pseudospectral computation and verification of prescribed-mass solutions of
(-Delta)^s u = lambda u + a(x) |u|^{p-2} u."""

from .boundstate import (
    BoundStateSolution,
    LinkingBox,
    choose_box,
    family_max,
    fiber_maximize,
    saddle_solve,
    verify_solution,
)
from .functionals import (
    EnergyBreakdown,
    energy_F,
    energy_Finf,
    energy_Finf_lambda,
    energy_Flambda,
    fiber_derivative,
    gradient_F,
    multiplier,
    pohozaev_residual,
    tangent_residual,
)
from .geometry import FiberPoint, barycenter, fiber_scale, local_average, translate
from .groundstate import GroundState, ScaledState, rescale_to_mass, solve_limit_equation
from .potential import (
    ConditionReport,
    ConstantPotential,
    InversePowerWell,
    check_conditions,
    delta0,
    sup_gap_threshold,
)
from .spectral import (
    Field,
    Grid,
    PhysParams,
    frac_laplacian,
    gagliardo_energy,
    l2_inner,
    l2_norm,
    load_field,
    lp_norm,
    make_grid,
    save_field,
)

__version__ = "0.1.0"

__all__ = [
    "BoundStateSolution",
    "ConditionReport",
    "ConstantPotential",
    "EnergyBreakdown",
    "FiberPoint",
    "Field",
    "Grid",
    "GroundState",
    "InversePowerWell",
    "LinkingBox",
    "PhysParams",
    "ScaledState",
    "barycenter",
    "check_conditions",
    "choose_box",
    "delta0",
    "energy_F",
    "energy_Finf",
    "energy_Finf_lambda",
    "energy_Flambda",
    "family_max",
    "fiber_derivative",
    "fiber_maximize",
    "fiber_scale",
    "frac_laplacian",
    "gagliardo_energy",
    "gradient_F",
    "l2_inner",
    "l2_norm",
    "load_field",
    "local_average",
    "lp_norm",
    "make_grid",
    "multiplier",
    "pohozaev_residual",
    "rescale_to_mass",
    "saddle_solve",
    "save_field",
    "solve_limit_equation",
    "sup_gap_threshold",
    "tangent_residual",
    "translate",
    "verify_solution",
]
