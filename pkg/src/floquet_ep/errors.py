"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError`; everything else is a
numerical failure. The CLI maps the two families to distinct exit codes.
"""


class FloquetEPError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FloquetEPError, ValueError):
    """Invalid experiment configuration."""


class NumericalError(FloquetEPError, ArithmeticError):
    """A numerical routine could not deliver its contract."""


# linear algebra
class NotSquare(FloquetEPError, ValueError):
    pass


class LengthMismatch(FloquetEPError, ValueError):
    pass


class NonConvergence(NumericalError):
    pass


class SingularMatrix(NumericalError):
    """Smallest singular value fell below the relative threshold."""


class NotSolvable(NumericalError):
    """Right-hand side has a component outside the range of a singular matrix."""


# model
class UnknownPreset(ConfigError):
    pass


class ParameterOutOfRange(ConfigError):
    pass


# integration
class StepSizeUnderflow(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


# floquet analysis
class DegenerateInput(NumericalError):
    pass


class TruncationNotConverged(NumericalError):
    pass


class NotResonant(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


# adiabatic frames
class GapCollapse(NumericalError):
    pass


class AmbiguousMatching(NumericalError):
    pass


class BadSpan(FloquetEPError, ValueError):
    pass


class VanishingNorm(NumericalError):
    pass
