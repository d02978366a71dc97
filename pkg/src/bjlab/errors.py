"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ResourceError(RuntimeError):
    """An exhaustive computation would exceed its hard resource cap."""


class SpectralHitError(ArithmeticError):
    """The energy is (numerically) an eigenvalue of the finite-volume operator."""

    def __init__(self, sigma_min, message=None):
        self.sigma_min = float(sigma_min)
        super().__init__(message or f"spectral hit: smallest singular value {self.sigma_min:.3e}")


class NoGoodCircleError(RuntimeError):
    """No circle in the scanned band keeps det[F(z) - t] away from zero."""
