"""Traveling counter-rotating vortex pairs in the half-plane.

Numerical toolkit for computing touching vortex-pair profiles by constrained
energy maximization, validating them against the closed-form Bessel dipole,
and evolving perturbed initial data under the induced 2D Euler dynamics.

The upper-half-plane representation is used throughout: the vorticity is a
nonnegative scalar field on {x2 > 0}, the lower half is its odd reflection,
and the wall x2 = 0 is a streamline enforced through the image kernel.
"""

__version__ = "0.1.0"

from .fields import (
    ContourPolygon,
    GridField,
    TailParams,
    contour_from_width_curve,
    contour_perimeter,
    grid_norms,
    load_contour,
    load_field,
    make_tailed_contour,
    patch_width_curve,
    rasterize,
    save_contour,
    save_field,
    steiner_symmetrize,
)
from .halfplane_kernel import (
    DivergentMomentError,
    GreenSingularityError,
    green_eval,
    green_pnorm_moment,
    stream_eval,
    stream_grid,
    velocity_eval,
)
from .energy import EnergyReport, interaction_energy, kinetic_energy, penalized_energy
from .oracle_lamb import (
    LambParams,
    bessel_j,
    first_j1_zero,
    lamb_dipole,
    lamb_grid,
    lamb_validate,
)
from .variational_solver import (
    DipoleProfile,
    GridSpec,
    InfeasibleImpulseError,
    SolveConfig,
    UndefinedResidualError,
    apply_vorticity_map,
    fixed_point_residual,
    solve_dipole,
    solve_multipliers,
)
from .identities import (
    IdentityReport,
    exponent_fit,
    pohozaev_check,
    scaling_check,
    touching_check,
    traveling_speed_formula,
)
from .evolution import (
    CFLError,
    DiagnosticsRecord,
    DiagnosticsSeries,
    ParticleEnsemble,
    center_of_mass_rate,
    discretize,
    ensemble_energy,
    estimate_shift,
    run,
    step,
)

__all__ = [
    "ContourPolygon",
    "GridField",
    "TailParams",
    "contour_from_width_curve",
    "contour_perimeter",
    "grid_norms",
    "load_contour",
    "load_field",
    "make_tailed_contour",
    "patch_width_curve",
    "rasterize",
    "save_contour",
    "save_field",
    "steiner_symmetrize",
    "DivergentMomentError",
    "GreenSingularityError",
    "green_eval",
    "green_pnorm_moment",
    "stream_eval",
    "stream_grid",
    "velocity_eval",
    "EnergyReport",
    "interaction_energy",
    "kinetic_energy",
    "penalized_energy",
    "LambParams",
    "bessel_j",
    "first_j1_zero",
    "lamb_dipole",
    "lamb_grid",
    "lamb_validate",
    "DipoleProfile",
    "GridSpec",
    "InfeasibleImpulseError",
    "SolveConfig",
    "UndefinedResidualError",
    "apply_vorticity_map",
    "fixed_point_residual",
    "solve_dipole",
    "solve_multipliers",
    "IdentityReport",
    "exponent_fit",
    "pohozaev_check",
    "scaling_check",
    "touching_check",
    "traveling_speed_formula",
    "CFLError",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "ParticleEnsemble",
    "center_of_mass_rate",
    "discretize",
    "ensemble_energy",
    "estimate_shift",
    "run",
    "step",
]
