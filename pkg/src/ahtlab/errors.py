"""Exception types raised across the package."""


class AhtError(Exception):
    """Base class for all package errors."""


class InvalidResolution(AhtError):
    pass


class GridMismatch(AhtError):
    pass


class NoBoundary(AhtError):
    pass


class OutOfCollar(AhtError):
    pass


class LoopOutsideDomain(AhtError):
    pass


class NonzeroMean(AhtError):
    pass


class WrongDomain(AhtError):
    pass


class IncompatibleData(AhtError):
    pass


class CflViolation(AhtError):
    pass


class NonFiniteField(AhtError):
    pass


class LeftDomain(AhtError):
    pass


class InsufficientOrder(AhtError):
    pass


class MalformedExpr(AhtError):
    pass


class OrderTooLarge(AhtError):
    pass


class MissingFactor(AhtError):
    pass


class WrongLocus(AhtError):
    pass


class ResidualTooLarge(AhtError):
    pass


class UnstableStencil(AhtError):
    pass


class TooLarge(AhtError):
    pass


class LTooSmall(AhtError):
    pass


class NotFound(AhtError):
    pass


class ConfigError(AhtError):
    pass
