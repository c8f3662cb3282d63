"""Exception hierarchy shared by every module."""


class SpinBathError(Exception):
    pass


class IntegrationError(SpinBathError):
    """Adaptive quadrature ran out of refinement budget."""

    def __init__(self, message, estimate=float("nan"), residual=float("nan")):
        super().__init__(f"{message} (estimate={estimate:.6e}, residual={residual:.3e})")
        self.estimate = estimate
        self.residual = residual


class PrincipalValueError(SpinBathError):
    """Richardson extrapolation over excision widths did not settle."""

    def __init__(self, message, estimates):
        super().__init__(f"{message}; last estimates: {estimates[-2]:.12e}, {estimates[-1]:.12e}")
        self.estimates = tuple(estimates)


class KernelEvaluationError(SpinBathError):
    def __init__(self, pair, cause):
        super().__init__(f"kernel failed for pair {pair}: {cause}")
        self.pair = pair
        self.cause = cause


class UndefinedRatioError(SpinBathError, ArithmeticError):
    pass


class CapacityError(SpinBathError):
    pass


class NoExactDFSError(SpinBathError, ValueError):
    pass


class DimensionError(SpinBathError, ValueError):
    pass


class TruncationError(SpinBathError):
    pass


class ResonanceError(SpinBathError, ValueError):
    pass


class FitError(SpinBathError):
    pass


class ConfigError(SpinBathError):
    pass
