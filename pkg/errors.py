"""Exception hierarchy for the minmax FEM solver"""

from typing import Any, Optional


class MinmaxError(Exception):
    """Base class for every error raised by the solver library"""


class InvalidParameterError(MinmaxError, ValueError):
    """A parameter violates a documented precondition"""


class DomainError(MinmaxError, ValueError):
    """A coordinate lies outside the domain of its transform branch"""


class SingularPointError(MinmaxError):
    """Evaluation requested exactly at a nucleus"""


class ConstructionError(MinmaxError):
    """A shape-function set failed its nodal residual check"""


class AssemblyIntegrityError(MinmaxError):
    """An assembled matrix failed a structural check (e.g. S not positive definite)"""


class FactorizationError(MinmaxError):
    """No admissible shift could be factorized"""


class WindowError(InvalidParameterError):
    """An energy left the electronic window (-2c^2, 0)"""


class ExpansionValidityError(MinmaxError):
    """The 1/g series of the minmax expansion is not accurate enough"""


class InsufficientDataError(MinmaxError):
    """Too few usable rungs for a fit"""


class InvalidPairingError(MinmaxError):
    """Relativistic and nonrelativistic energies come from different runs"""


class ConvergenceError(MinmaxError):
    """An iteration hit its cap; `best` holds the best iterate reached"""

    def __init__(self, message: str, best: Optional[Any] = None):
        super().__init__(message)
        self.best = best


class ConfigError(InvalidParameterError):
    """A run-config key is unknown, malformed or out of range"""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
