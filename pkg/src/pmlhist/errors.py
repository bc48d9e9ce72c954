"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument violates a documented precondition (bad b, alpha, k, ...)."""


class NoNoiseNeeded(Exception):
    """The requested leakage level is at or above the PML ceiling -log(alpha).

    No finite noise scale attains the target; arbitrarily little noise already
    satisfies it.
    """

    def __init__(self, target: float, cap: float):
        self.target = target
        self.cap = cap
        super().__init__(
            f"target epsilon {target!r} >= PML cap {cap!r}; no noise is needed"
        )


class CalibrationError(RuntimeError):
    """Bisection failed to reach the requested tolerance."""


class EnumerationTooLarge(RuntimeError):
    """Exact leakage enumeration would exceed the configured term budget."""

    def __init__(self, terms: int, max_terms: int):
        self.terms = terms
        self.max_terms = max_terms
        super().__init__(
            f"enumeration needs {terms} count vectors, budget is {max_terms}"
        )
