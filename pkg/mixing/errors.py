"""Exception hierarchy shared by the library modules."""


class MixingError(Exception):
    """Base class for every error raised by the mixing package."""


class DomainError(MixingError, ValueError):
    """An argument lies outside the operation's domain (bad dimension, bad label, j > t, ...)."""


class InvalidCertificateError(DomainError):
    """A drift certificate violates V >= 1 or its constant ranges."""


class CapacityError(MixingError):
    """An exact computation would exceed its configured size guard."""


class ModelError(MixingError):
    """A stochastic recursive sequence left its state space or got bad parameters."""


class ConfigError(MixingError):
    """A model config is inconsistent in a way the schema alone cannot express."""
