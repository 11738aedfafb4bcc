"""Exception types raised across the package."""


class UqcError(Exception):
    """Base class for all package errors."""


class NotHermitianError(UqcError, ValueError):
    def __init__(self, asymmetry: float, tol: float):
        super().__init__(f"operator is not Hermitian: max |H - H^dag| = {asymmetry:.3e} > {tol:.1e}")
        self.asymmetry = asymmetry


class NotUnitaryError(UqcError, ValueError):
    def __init__(self, error: float, tol: float, what: str = "matrix"):
        super().__init__(f"{what} is not unitary: ||U^dag U - I||_max = {error:.3e} > {tol:.1e}")
        self.error = error


class DimensionError(UqcError, ValueError):
    pass


class BranchCutError(UqcError, ValueError):
    """Matrix logarithm requested too close to the -pi branch cut."""


class DslSyntaxError(UqcError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class BasePointError(UqcError, ValueError):
    """f(U0) differs from the identity where the identity is required."""


class UnknownTaskError(UqcError, KeyError):
    def __str__(self):
        # KeyError would quote the message
        return str(self.args[0]) if self.args else ""
