"""Exception hierarchy shared by the library and the CLI."""


class PermlabError(Exception):
    """Base class for all library errors."""


class InvalidSelectionError(PermlabError, ValueError):
    """Channel selection does not fit the matrix or has the wrong size."""


class SizeLimitError(PermlabError, ValueError):
    """Problem exceeds a guard that keeps exact computations tractable."""


class DomainError(PermlabError, ValueError):
    """Argument outside the mathematical domain of a formula."""


class ConfigError(PermlabError, ValueError):
    """Invalid sampling plan or experiment configuration."""


class NonUnitaryError(PermlabError, ValueError):
    """Matrix failed the unitarity gate."""


class DegenerateDispersionError(PermlabError, ArithmeticError):
    """Error ratio requested with zero estimated error but nonzero actual error."""


class NumericalGuardError(PermlabError, ArithmeticError):
    """A NaN or infinity appeared in a result."""
