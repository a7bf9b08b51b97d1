"""Discrete-velocity Boltzmann solver with admissible external forces,
a linearized companion solver, and entropy-based convergence diagnostics."""

__version__ = "0.1.0"

from .velocity_space import (  # noqa: F401
    VelocityGrid,
    SphereQuadrature,
    build_grid,
    bracket,
    double_bracket,
    maxwellian,
    sphere_quadrature,
)
from .collision import (  # noqa: F401
    CollisionKernel,
    CollisionTable,
    build_table,
    conservation_fix,
    hard_sphere,
    linearized_collision,
    maxwell_molecule,
    post_collision,
    q_bilinear,
    scaled_integrand,
    tabulated_kernel,
)
from .force_field import (  # noqa: F401
    ForceField,
    custom_force,
    equilibrium_residual,
    magnetic_force,
    validate_force,
    zero_force,
)
from .solver import (  # noqa: F401
    PhaseGrid,
    SolverConfig,
    State,
    Trajectory,
    evolve,
    moment_laws,
    step_linearized,
    step_nonlinear,
)
from .entropy import (  # noqa: F401
    EntropyReport,
    clipped_initial_fluctuation,
    density_from_fluctuation,
    dissipation_R,
    dissipation_equality_residual,
    dissipation_r,
    entropic_metric,
    entropy_H,
    entropy_h,
    fluctuation,
    half_quadratic,
    normalization,
    renormalized_fluctuation,
)
