"""Quantum geodesic flow on the integer lattice line.

The lattice calculus lives in :mod:`latticegeo.lattice`, velocity fields and
their equations in :mod:`latticegeo.velocity`, the amplitude flow in
:mod:`latticegeo.amplitude`, time stepping in :mod:`latticegeo.evolution`,
and the scenario runner/CLI in :mod:`latticegeo.runner` and
:mod:`latticegeo.cli`.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConfigParseError,
    DimensionError,
    DivergenceError,
    PreconditionError,
    UndefinedPeakError,
)
from .lattice import (  # noqa: E402
    EdgeMetric,
    Measure,
    OneForm,
    div_basis,
    eval_field,
    exterior_d,
    finite_diff,
    integrate,
    is_divergence_compatible,
    laplacian,
    lattice_function,
    rho,
    shift,
)
from .velocity import (  # noqa: E402
    PolarVelocity,
    VelocityField,
    aux_residual,
    kappa_flat,
    kappa_general,
    kappa_polar,
    polar_to_field,
    reality_residual,
    theta_rhs,
    velocity_rhs,
)
from .amplitude import (  # noqa: E402
    amplitude_rhs,
    amplitude_rhs_polar,
    imaginary_mass,
    norm,
    peak_position,
    peak_velocity,
)
from .evolution import FlowState, Trajectory, euler_oracle, evolve, rk4_step  # noqa: E402
