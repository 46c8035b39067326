"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input data or configuration (CLI exit code 1)."""


class BudgetExceededError(RuntimeError):
    """An exhaustive computation would exceed its configured budget."""
