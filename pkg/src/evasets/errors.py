"""Exception types shared across the package."""


class EvasetsError(Exception):
    """Base class for all package errors."""


class NotPrime(EvasetsError, ValueError):
    pass


class Overflow(EvasetsError, ValueError):
    """Field order above the supported cap."""


class DimensionMismatch(EvasetsError, ValueError):
    pass


class TooLarge(EvasetsError, RuntimeError):
    """An exhaustive enumeration would exceed its configured cap."""


class EmptyInput(EvasetsError, ValueError):
    pass


class DegenerateTriple(EvasetsError, ValueError):
    pass


class UnknownVertex(EvasetsError, KeyError):
    pass


class InvalidParams(EvasetsError, ValueError):
    pass


class Unsupported(EvasetsError, NotImplementedError):
    pass


class TooSmall(EvasetsError, ValueError):
    pass


class RichFlatPresent(EvasetsError, ValueError):
    def __init__(self, message, witness=None, count=None):
        super().__init__(message)
        self.witness = witness
        self.count = count


class ExhaustedAttempts(EvasetsError, RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NonTermination(EvasetsError, RuntimeError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}
