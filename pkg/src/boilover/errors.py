"""Exception hierarchy shared by all modules."""


class BoiloverError(Exception):
    """Base class for every error raised by the package."""


class MissingInput(BoiloverError, ValueError):
    """A required quantity was not supplied and cannot be derived."""


class Conflict(BoiloverError, ValueError):
    """Two redundant inputs disagree beyond tolerance."""


class InvalidInput(BoiloverError, ValueError):
    """A record violates one of its invariants."""


class DomainError(BoiloverError, ValueError):
    """A closed form was evaluated outside its support."""


class InvalidRegime(BoiloverError):
    """The inputs fall outside the validity range of a solution."""


class Instability(BoiloverError):
    """Explicit time step violates the stability bound."""


class NonConvergence(BoiloverError):
    """Linear solve did not reach the requested residual."""


class SchemaError(BoiloverError, ValueError):
    """Malformed data file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnitError(SchemaError):
    """A column or value carries a unit that is not declared."""
