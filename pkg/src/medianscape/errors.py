class ValidationError(ValueError):
    """Bad input: malformed data, out-of-range parameters, invalid metric."""


class AuditError(RuntimeError):
    """An invariant that should hold by construction failed its runtime audit."""
