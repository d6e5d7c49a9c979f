class BohmfluidError(Exception):
    """Base class for package errors."""


class ValidationError(BohmfluidError, ValueError):
    """Bad input.  ``keys`` lists offending config keys when known."""

    def __init__(self, msg, keys=()):
        super().__init__(msg)
        self.keys = list(keys)


class NumericalAbort(BohmfluidError, RuntimeError):
    """Integration stopped; ``state`` holds the last good state if known."""

    def __init__(self, msg, state=None, diagnostics=None):
        super().__init__(msg)
        self.state = state
        self.diagnostics = diagnostics or {}


class RecoveryError(NumericalAbort):
    pass


class VacuumError(BohmfluidError, ValueError):
    pass
