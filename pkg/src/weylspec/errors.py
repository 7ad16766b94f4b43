"""Exception hierarchy. Every numerical failure derives from :class:`WeylError`."""


class WeylError(Exception):
    """Base class for all library errors."""


class NonHermitian(WeylError, ValueError):
    pass


class GridOutsideDomain(WeylError, ValueError):
    pass


class GridMismatch(WeylError, ValueError):
    pass


class StepSizeUnderflow(WeylError, ArithmeticError):
    pass


class SingularNormalization(WeylError, ArithmeticError):
    """Boundary normalization matrix is numerically singular (z near a truncated eigenvalue)."""


class TruncationNotConverged(WeylError, ArithmeticError):
    pass


class SingularPencil(WeylError, ArithmeticError):
    pass


class SingularW(WeylError, ArithmeticError):
    pass


class NotHerglotz(WeylError, ValueError):
    pass


class KernelMismatch(WeylError, ArithmeticError):
    pass


class PartitionMismatch(WeylError, ValueError):
    pass


class SingularShift(WeylError, ArithmeticError):
    pass


class ConfigError(WeylError, ValueError):
    pass
