"""Exception hierarchy shared across the package."""


class NDReconError(Exception):
    """Base class for all errors raised by ndrecon."""


class ConfigError(NDReconError, ValueError):
    """Invalid user configuration (bad preset, flag, or config file)."""


class DegenerateGrid(NDReconError, ValueError):
    pass


class NonPositiveSpeed(NDReconError, ValueError):
    pass


class ShapeMismatch(NDReconError, ValueError):
    pass


class EmptyMatrix(NDReconError, ValueError):
    pass


class CFLViolation(NDReconError, ValueError):
    pass


class MissingSeed(ConfigError):
    pass


class NoWork(ConfigError):
    pass


class InsufficientObservationTime(ConfigError):
    """T does not exceed the longest travel time across the domain."""


class NumericalError(NDReconError, ArithmeticError):
    """Base class for failures of the linear algebra (exit code 3 in the CLI)."""


class SingularMatrix(NumericalError):
    pass


class NearSingularSystem(NumericalError):
    """The elliptic system is (numerically) singular: lambda sits on a Neumann eigenvalue."""


class ZeroTruth(NDReconError, ValueError):
    pass
