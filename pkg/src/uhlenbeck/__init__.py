"""Numerical checks of the sharp second-order inequality for Uhlenbeck-type systems."""
from .errors import (ConfigError, ConstraintViolation, ContinuationAbort, CriticalPoint,
                     DivergentIntegral, DomainError, GeometryError, IndexViolation,
                     NewtonStall, NonPositiveCoefficient, NonsmoothCoefficient,
                     SingularAtZero, SingularOmega, SingularPoint, UhlenbeckError)
from .fields import (ClosureField, Jet3, PolynomialField, RadialField, SmoothField,
                     derived_quantities)
from .orlicz import (GrowthCoefficient, RegularizedCoefficient, YoungPair, build_young_pair,
                     compute_indices, regularize, sandwich_check, sobolev_check, v_map)
from .pointwise import (PointwiseReport, check_inequality, evaluate_identity, kappa,
                        sharpness_witness)
from .sharpness import (SharpnessConfig, analytic_bound, ellipsoid_identity,
                        ellipsoid_membership, evaluate, global_search, psi_profile)
from .solver import (DiscreteSolution, Grid2, NormReport, assemble_residual,
                     local_estimate_check, norms, solve)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
