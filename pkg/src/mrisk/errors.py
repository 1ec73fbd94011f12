"""Exception types shared across the package."""


class RankDeficientDesign(ValueError):
    """The design matrix does not have full column rank."""


class ProxSolveError(RuntimeError):
    """The scalar prox solve failed to converge (bug signal for convex losses)."""


class SystemSolveError(RuntimeError):
    """The asymptotic risk system could not be solved from any initial point."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class TuningError(RuntimeError):
    """Every grid point was degenerate; no lambda could be selected."""


class OracleError(RuntimeError):
    """A finite-difference oracle's inner fit failed to converge."""
