"""Exception hierarchy shared by all modules."""


class OUGaussError(Exception):
    """Base class for package errors."""


class ParameterDomainError(OUGaussError, ValueError):
    """A parameter lies outside the domain where a quantity is defined."""


class SingularityError(OUGaussError, ValueError):
    """Evaluation requested on a singular set (e.g. the diagonal s = t)."""


class PrecisionError(OUGaussError, ArithmeticError):
    """A finite-difference step became too small to be trusted."""


class IntegrationError(OUGaussError, ArithmeticError):
    """Quadrature failed to reach the requested accuracy."""


class UnsupportedKernelError(OUGaussError, ValueError):
    """The kernel lacks a capability required by the operation."""


class SimulationError(OUGaussError, ArithmeticError):
    """Gram matrix factorization failed even after jitter escalation."""


class DegeneratePathError(OUGaussError, ValueError):
    """An estimator denominator vanished."""


class DataQualityError(OUGaussError, RuntimeError):
    """Too many replications were degenerate to trust a Monte Carlo result."""


class ConfigurationError(OUGaussError, ValueError):
    """An experiment configuration is malformed or violates rate conditions."""
