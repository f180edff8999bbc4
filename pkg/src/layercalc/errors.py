"""Exception hierarchy."""


class LayerCalcError(Exception):
    """Base class for all errors raised by layercalc."""


class ShapeError(LayerCalcError, ValueError):
    """An array has the wrong length or shape."""


class DegenerateSpaceError(LayerCalcError, ValueError):
    """A Gram matrix is not Hermitian positive definite."""


class DegenerateQuotientError(LayerCalcError, ValueError):
    """A restriction or trace map is not surjective (rank deficient)."""


class NotCoercive(LayerCalcError):
    """The inf-sup constant of a form is below the coercivity cliff."""

    def __init__(self, lam, threshold):
        self.lam = float(lam)
        self.threshold = float(threshold)
        super().__init__(
            f"form is not coercive: inf-sup constant {self.lam:.3e} < {self.threshold:.3e}"
        )


class NotASolution(LayerCalcError):
    """An interior element does not satisfy (Lu)|_side = 0 to tolerance."""

    def __init__(self, residual, threshold):
        self.residual = float(residual)
        self.threshold = float(threshold)
        super().__init__(
            f"element is not a solution: interior residual {self.residual:.3e} > {self.threshold:.3e}"
        )


class Singular(LayerCalcError):
    """A boundary value problem has a nontrivial solution kernel."""

    def __init__(self, kernel, message=None):
        self.kernel = kernel
        super().__init__(message or f"problem is not uniquely solvable (kernel dimension {kernel.shape[1]})")


class Inconsistent(LayerCalcError):
    """Boundary data violates the compatibility condition; no solution exists."""

    def __init__(self, defect, threshold):
        self.defect = float(defect)
        self.threshold = float(threshold)
        super().__init__(f"data is incompatible: defect {self.defect:.3e} > {self.threshold:.3e}")


class NotInvertible(LayerCalcError):
    """A boundary operator lacks the bounded inverse a layer method needs."""

    def __init__(self, kind, sigma_min, sigma_max, threshold, message=None):
        self.kind = kind
        self.sigma_min = float(sigma_min)
        self.sigma_max = float(sigma_max)
        self.threshold = float(threshold)
        super().__init__(
            message
            or f"{kind} is not invertible: sigma_min/sigma_max = "
            f"{self.sigma_min:.3e}/{self.sigma_max:.3e} below {self.threshold:.1e}"
        )


class ConfigError(LayerCalcError, ValueError):
    """A configuration or instance descriptor is invalid."""


class RetryExhausted(LayerCalcError):
    """Random instance generation failed to meet its requirements."""
