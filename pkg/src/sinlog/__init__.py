"""Bounded planar elliptic solutions with prescribed singular sets.

The package constructs the explicit solution pair
u = (sin log f, cos log f) driven by a sum of logarithmic point
potentials, and verifies its defining identities, Sobolev membership,
weak-form equation and discontinuity behaviour numerically.
"""

from .sets import (
    CantorDust,
    CompactSetSpec,
    DenseEnumeration,
    Disk,
    FiniteSet,
    Polyline,
    UnionSet,
    density_radius,
    enumerate_points,
    normalize,
)
from .field import (
    CoefficientSchedule,
    FieldValue,
    SingularPotential,
    build_potential,
    eval_f,
    eval_grad_f,
    truncation_index,
    validate_schedule,
)
from .solution import (
    ProbeFrame,
    RhsValue,
    Solution,
    classical_residual,
    eval_grad_u,
    eval_rhs,
    eval_u,
    fd_laplacian,
    grad_norm_sq,
    oscillation_report,
    radial_probe,
    smooth_point_oscillation,
)
from .quadrature import (
    DominationParams,
    ExcisionPolicy,
    QuadratureResult,
    dirichlet_energy,
    domination_constants,
    envelope_l1_norm,
    envelope_value,
    integrate_ball,
    kernel_integral,
)
from .testfuncs import (
    BumpTestFunction,
    LogLogCutoff,
    cutoff_norms,
    disjoint_support_level,
)
from .verify import (
    WeakResidualReport,
    domination_spot_check,
    run_verification_suite,
    truncation_convergence,
    weak_residual,
)

__version__ = "0.1.0"
