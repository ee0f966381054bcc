"""Variable-exponent Lebesgue norms, matrix-weighted Sobolev pairs and a degenerate
p(x)-Laplacian Neumann solver, with numerical checks of the inequalities that tie
Poincare constants to Neumann regularity."""

from .errors import (ConfigurationError, ConvergenceFailure, DegenerateWeightError, DomainError,
                     EstimationFailure, NumericalRangeError, PreconditionError, ShapeMismatchError,
                     UndefinedRatioError, ValidationError, VxError)
from .grid import (DualMesh, Grid, ScalarField, VectorField, build_grid, compact_gradient,
                   gradient, integrate, weighted_average, write_field_csv)
from .mweight import (EigenData, MatrixField, component_norm_equivalence_check, eigendecompose,
                      gamma, lq_norm, sqrt_field)
from .neumann import (ProblemData, SolverOptions, SolverReport, coercivity_check, energy,
                      gamma_functional, hemicontinuity_check, monotonicity_check,
                      regularity_check, solve, t_pairing, weak_residual)
from .poincare import (PoincareEstimate, average_equivalence_check, estimate_C0,
                       neumann_eigen_oracle, neumann_implies_poincare_check, poincare_pair_check,
                       poincare_ratio)
from .sobolev import SobolevPair, lift, mean_zero_project, sobolev_norm
from .vxnorm import (ExponentField, ExtremalExponents, conjugate, holder_check, luxemburg_norm,
                     mod_norm_bounds_check, modular, power_norm_check, weighted_norm)

__version__ = "0.1.0"
