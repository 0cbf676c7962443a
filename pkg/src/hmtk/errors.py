class HmtkError(Exception):
    """Base class for all errors raised by hmtk."""


class ValidationError(HmtkError):
    """Input violates an axiom (asymmetric metric, nonpositive weight, ...)."""


class ParseError(HmtkError):
    """Malformed file; ``context`` names the line or field that failed."""

    def __init__(self, message: str, context: str | None = None):
        self.message = message
        self.context = context
        super().__init__(f"{message} ({context})" if context else message)


class NetError(HmtkError):
    """Net hierarchy could not be built with the requested constants."""


class AxiomViolation(HmtkError):
    """Dyadic cube family failed one of its structural checks."""

    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message)


class DegenerateCube(HmtkError):
    pass


class PreconditionError(HmtkError, ValueError):
    pass
