"""Toolkit for multiple positive solutions of quasilinear Dirichlet problems
driven by a generator phi, with a sign-changing forcing term.

Main entry points:

    PhiSpec            generator families with certified growth bounds
    NonlinearitySpec   piecewise-linear forcing with skeleton validation
    shoot / find_band_solution     radial shooting on balls
    minimize / sweep   truncated-energy minimization and lambda scans
    verify.*           independent post-hoc solution checks
"""

from .errors import (ConditionViolation, DomainError, NumericError,
                     PhilapError, RangeError, StructuralError)
from .grids import Domain, GridFunction
from .nfunction import PhiSpec, certify_growth, check_zeta_bounds, \
    luxemburg_norm
from .nonlinearity import NonlinearitySpec, TruncatedF, classify_band, \
    truncate, validate
from .energy import (EnergyReport, LambdaSweep, ThresholdEstimate,
                     build_plateau, discretize_energy, energy_gradient,
                     lambda_threshold_estimate, minimize, minimize_multistart,
                     sweep)
from .radial import (IdentityCheck, RadialProfile, SolveReport,
                     check_bk_exceeded, energy_identity_integral,
                     find_band_solution, shoot, solve_dirichlet_radius)
from .verify import (VerificationCheck, check_band_ordering,
                     check_necessary_condition, check_positivity,
                     check_pucci_serrin, summarize, weak_residual)

__version__ = "0.1.0"
