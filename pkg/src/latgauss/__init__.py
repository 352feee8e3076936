"""Gaussian masses, periodic Gaussians and discrete Gaussians on lattice cosets."""
from .errors import BudgetExceeded, LatticeError, NotComparable, ParentMismatch, SingularBasis, SingularCoefficients
from .lattice import Coset, CosetReps, Lattice, SublatticeRep, dual, enumerate_points, integer_lattice, intersect, make_lattice, quotient_reps, sublattice
from .mass import (
    CertifiedValue,
    GaussianParam,
    NotPositiveDefinite,
    cosine_moments,
    dual_mass,
    mass,
    periodic_gaussian,
    rotation_lattice,
    theta_split_identity,
)
from .moments import MomentReport, derivative_report, finite_difference, fourth_moment_form, moment_report
from .sampler import SampleBatch, empirical_moments, goodness_of_fit, sample
from .verify import (
    Interval,
    Status,
    Verdict,
    check_corollaries,
    check_covariance_domination,
    check_fourth_moment,
    check_hessian_domination,
    check_main_inequality,
    check_monotone_s,
    check_monotone_sigma,
    check_positive_correlation,
    check_sublattice_monotone,
)

__version__ = "0.1.0"
