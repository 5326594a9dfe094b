"""Exception types shared across the package."""


class MechxaiError(Exception):
    """Base class for all package errors."""


class DomainError(MechxaiError):
    """A physically or mathematically inadmissible input value."""


class UsageError(MechxaiError):
    """Inconsistent arguments: shape mismatches, bad indices, illegal options."""


class NumericError(MechxaiError):
    """Non-finite values encountered during a numeric computation."""


class IntegrityError(MechxaiError):
    """A persisted artifact does not match its recorded digest."""


class ValidationError(MechxaiError):
    """Invalid configuration. Carries every violation found, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations))
