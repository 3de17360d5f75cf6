"""Exception types shared across the library."""


class OrientBenchError(Exception):
    """Base class for all library-specific failures."""


class QuadratureNotConverged(OrientBenchError):
    """Adaptive quadrature hit its maximum refinement depth before the
    successive-estimate tolerance was met."""


class FitNotConverged(OrientBenchError):
    """Concentration root-finder exhausted its iteration budget."""


class DegenerateCovariance(OrientBenchError):
    """Covariance eigenvalue below the admissible floor even after clamping."""


class InfeasibleSpread(OrientBenchError):
    """Internal assertion: a sample angle left the arcsin domain.

    Cannot occur for valid ordered eigenvalues under the weight rule; raised
    only to catch upstream corruption."""


class RejectionBudgetExceeded(OrientBenchError):
    """Rejection sampler's acceptance rate collapsed; envelope is bad."""


class AntipodalViolation(OrientBenchError):
    """A user-supplied system function broke g(-x) = -g(x)."""


class CholeskyFailure(OrientBenchError):
    """UKF covariance lost positive definiteness; treated as divergence."""


class DegenerateWeights(OrientBenchError):
    """All particle weights underflowed to zero."""


class ConfigError(OrientBenchError):
    """Malformed or contradictory scenario configuration."""


class IoError(OrientBenchError):
    """Failed to read or write an artifact file."""
