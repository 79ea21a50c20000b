"""Exception hierarchy shared by the library and the command line."""


class CoadjointError(Exception):
    """Base class for all library errors."""

    exit_code = 1
    kind = "error"

    def record(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class ValidationError(CoadjointError, ValueError):
    """Bad input: out-of-range parameters, malformed files, violated preconditions."""

    exit_code = 2
    kind = "validation"


class NumericalError(CoadjointError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy result."""

    exit_code = 3
    kind = "numerical"


class NonContractionError(NumericalError):
    kind = "non-contraction"


class IllConditionedError(NumericalError):
    kind = "ill-conditioned"

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition

    def record(self):
        out = super().record()
        out["condition"] = self.condition
        return out


class BlowUpError(NumericalError):
    """Raised by the blow-up guard; ``partial`` holds the trajectory so far."""

    kind = "blow-up"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class VerificationError(CoadjointError, AssertionError):
    """An exact identity that must hold did not."""

    exit_code = 3
    kind = "verification"
