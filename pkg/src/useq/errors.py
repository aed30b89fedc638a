class UsageError(ValueError):
    """Bad arguments or configuration, detected before any evaluation."""
