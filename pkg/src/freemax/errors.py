"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(ValueError):
    """Inputs violate a structural precondition (shape, symmetry, ...)."""


class AmbiguousCutError(ContractError):
    """A spectral cut level sits on (or within tolerance of) an eigenvalue."""
