"""Transportation-information inequalities on finite reversible chains and 1-D diffusions."""

from .errors import (ConfigError, D1Divergent, DimensionMismatch, GammaDivergent, IntegrabilityFailed,
                     InvalidInput, NotIrreducible, TransinfoError, UnsupportedExact, UnverifiedConstants)
from .markov import (ReversibleChain, asymptotic_variance, carre_du_champ, dirichlet_form, fisher_information,
                     lipschitz_poisson_constant, poincare_constant, poisson_solve, sigma_gamma_bound)
from .metric_measure import (Density, FiniteMetricSpace, Measure, TestFunctionPairFamily, lipschitz_family,
                             optimal_transport, relative_entropy, transport_cost, transport_distance,
                             wasserstein)
from .rates import RateFunction, alpha_from_beta, gamma_from_beta, legendre_conjugate
from .verifier.reports import InequalityReport

__version__ = "0.1.0"
