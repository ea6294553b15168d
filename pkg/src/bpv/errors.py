"""Exception hierarchy.

Two families matter to callers (and to the CLI exit status): input problems
derive from :class:`BPVValidationError`, numerical failures from
:class:`BPVNumericalError`.
"""

from __future__ import annotations


class BPVError(Exception):
    """Base class for every error raised by this package."""


class BPVValidationError(BPVError, ValueError):
    """Inputs violate a model invariant."""


class DomainError(BPVValidationError):
    """Arguments fall outside the domain where an operation is defined."""


class RangeError(BPVValidationError):
    """A price or standardized coordinate lies outside its admissible interval."""


class ReferenceValidationError(BPVValidationError):
    """A reference acceptance distribution breaks one of its conditions.

    ``condition`` is one of ``"knots"``, ``"endpoint"``, ``"apex"`` or
    ``"monotonicity"``.
    """

    def __init__(self, condition: str, message: str):
        super().__init__(f"{condition}: {message}")
        self.condition = condition


class ConfigError(BPVValidationError):
    """A run configuration failed to parse or validate.

    ``problems`` lists every violation as ``"path: message"``.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) if self.problems else "invalid configuration")


class BPVNumericalError(BPVError, ArithmeticError):
    """A numerical procedure could not deliver its contract."""


class QuadratureError(BPVNumericalError):
    def __init__(self, a: float, b: float, message: str = "adaptive quadrature did not converge"):
        super().__init__(f"{message} on [{a!r}, {b!r}]")
        self.interval = (a, b)


class DegenerateMassError(BPVNumericalError):
    """The membership curve integrates to (numerically) zero."""


class BracketError(BPVNumericalError):
    """The function does not change sign across the supplied bracket."""


class NoSignChangeError(BPVNumericalError):
    """A scan found no sign change of the stance gap."""


class SamplingError(BPVNumericalError):
    def __init__(self, index: int, cause: str):
        super().__init__(f"scenario {index}: {cause}")
        self.index = index
