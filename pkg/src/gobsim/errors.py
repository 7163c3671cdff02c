"""Error types shared across the simulator modules."""


class NumericalDomainError(ArithmeticError):
    """A linear-algebra step left its valid domain (singular matrix, non-PSD input)."""


class InfeasibleAssignmentError(RuntimeError):
    """A beam assignment cannot support interference-free BD precoding.

    Carries the index of the first UE for which the null-space condition
    failed, when known.
    """

    def __init__(self, message, ue_index=None):
        super().__init__(message)
        self.ue_index = ue_index


class SearchSpaceError(RuntimeError):
    """The exhaustive search space exceeds the configured cap."""
