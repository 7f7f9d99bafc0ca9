"""Floquet exceptional points and loop-direction chirality in slowly driven
non-Hermitian Hamiltonians."""

__version__ = "0.1.0"

from .errors import ConfigError, FloquetEPError, NumericalError  # noqa: E402
from .model import PeriodicHamiltonian, preset  # noqa: E402

__all__ = ["ConfigError", "FloquetEPError", "NumericalError", "PeriodicHamiltonian", "preset", "__version__"]
