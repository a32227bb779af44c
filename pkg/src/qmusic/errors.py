"""Exception hierarchy shared across the package."""


class QMusicError(Exception):
    """Base class for all package errors."""


class DimensionError(QMusicError, ValueError):
    """Shapes or register sizes do not line up."""


class NotHermitianError(QMusicError, ValueError):
    pass


class NotUnitaryError(QMusicError, ValueError):
    pass


class NumericalError(QMusicError, ArithmeticError):
    """A decomposition failed or produced an out-of-tolerance result."""


class ConfigError(QMusicError, ValueError):
    pass
