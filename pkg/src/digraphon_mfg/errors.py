"""Exception types shared across the package."""


class ConfigError(Exception):
    """Raised for invalid configuration input (unknown names, bad keys, bad values)."""


class ModelConsistencyError(Exception):
    """Raised when a constructed model object violates its own probabilistic contract.

    This always indicates a modelling bug (negative transition mass, non-finite
    optimizer state) rather than bad user input, and is never silently repaired.
    """
