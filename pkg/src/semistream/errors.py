"""Exception hierarchy shared by every module."""


class SemistreamError(Exception):
    pass


class InputError(SemistreamError, ValueError):
    """Malformed or mismatched input data."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SizeError(InputError):
    """Instance too large for an exhaustive oracle."""


class ParameterError(SemistreamError, ValueError):
    pass


class ProtocolViolation(SemistreamError, RuntimeError):
    """An adversary strategy broke the hand-of-t-cards protocol."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class InvariantViolation(SemistreamError, AssertionError):
    """A guarantee that must hold on every run was broken."""
