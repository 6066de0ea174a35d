"""Local linear regression on curved data manifolds.

Sample generators for small curved manifolds, Frenet frames and principal
curvatures, moment tables and normal systems, a rank-aware least-squares
solver, closed-form leading-order predictions, and an experiment harness.
"""

from .exceptions import ConfigError, DegenerateFrame, FlatDirection, ManifoldRegError
from .frames import (
    FrenetFrame,
    LocalFrame,
    PcaSpectrum,
    PolynomialCurve,
    PrincipalSubspace,
    frenet_frame_3d,
    generalized_frenet,
    nonlinear_quantities,
    pca_spectrum,
    principal_curvatures,
    project_onto,
    transform_solution,
)
from .idx import read_idx, write_idx
from .manifold_gen import (
    ManifoldSpec,
    NoiseSpec,
    SampleSet,
    add_noise,
    bend_dataset,
    kappa_from_hessian,
    sample_uniform,
)
from .moments import (
    MomentTable,
    NormalSystem,
    analytic_moment_uniform,
    assemble_normal_system,
    empirical_moments,
    hypersurface_moment_table,
    quadrature_moments,
)
from .polynomial import TargetFunction
from .regression import (
    DegeneracyReport,
    LocalLinearRegression,
    RegressionSolution,
    diagnose_degeneracy,
    solve_from_data,
    solve_normal_system,
)
from .theory import (
    TheoryPrediction,
    block_error_order,
    enumerate_index_sequences,
    error_order,
    k2_from_curvature,
    predict_curve2d,
    predict_curve2d_noisy,
    predict_curve3d,
    predict_curve_nd,
    predict_curve_nd_all,
    predict_hypersurface,
)

__version__ = "0.1.0"
