class DomainError(ValueError):
    """A quantity is undefined for the given input (e.g. a zero-mass cell)."""


class ConstraintError(ValueError):
    """A balance constraint cannot be satisfied."""
