"""Exception types raised across the package."""


class LatticeError(ValueError):
    pass


class SingularBasis(LatticeError):
    pass


class SingularCoefficients(LatticeError):
    pass


class ParentMismatch(LatticeError):
    pass


class BudgetExceeded(RuntimeError):
    """Enumeration would produce more points than the configured cap."""

    def __init__(self, predicted, cap):
        super().__init__(f"enumeration needs ~{predicted:.3g} points, cap is {cap}")
        self.predicted = predicted
        self.cap = cap


class NotComparable(ValueError):
    """Two covariance parameters are not ordered in the PSD sense."""
