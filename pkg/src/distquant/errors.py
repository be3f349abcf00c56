"""Semantic exception hierarchy.

Public functions raise these instead of bare ValueError/ArithmeticError so
callers (and the CLI exit-code mapping) can tell configuration mistakes
apart from genuine numerical failures.
"""


class WorkbenchError(Exception):
    """Base error for this package."""


class InputError(WorkbenchError, ValueError):
    """Inputs violate a contract: bad domain, shape, schema, or option."""


class ConfigError(InputError):
    """Malformed or schema-violating experiment configuration."""


class ConfigDomainMismatch(InputError):
    """Experiment pieces are individually valid but mutually incompatible."""


class SupportMismatch(InputError):
    """A curve or grid does not cover the support it is integrated against."""


class InvalidLevels(InputError):
    """Quantizer level counts must all be >= 2."""


class InfeasibleCandidate(InputError):
    """A rate-allocation candidate exceeds the bit budget."""


class NumericalFailure(WorkbenchError):
    """A computation could not be completed to its advertised tolerance."""


class UnboundedCurvature(NumericalFailure):
    """Log-density second differences diverge on the tabulated grid."""


class QuadratureDivergence(NumericalFailure):
    """Quadrature failed its refinement/tail-mass convergence check."""


class DegenerateResponse(NumericalFailure):
    """Response probability hit 0 or 1 where Fisher information is needed."""


class SingularCovariance(NumericalFailure):
    """Covariance matrix is not positive definite for the requested rho."""


class NoConvergence(NumericalFailure):
    """Iterative solver exhausted its retry ladder without converging."""


class NotAMaximum(NumericalFailure):
    """A candidate optimum was beaten by a feasible perturbation."""


class SpectrumUnderflow(NumericalFailure):
    """Noise spectrum vanishes where the target response has content."""


class TooLarge(NumericalFailure):
    """Exhaustive enumeration would exceed the configured size cap."""
