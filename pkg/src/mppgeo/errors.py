"""Exception types shared across the library."""

from __future__ import annotations


class MppgeoError(Exception):
    """Base class for all library-specific errors."""


class PathLeavesChart(MppgeoError):
    """A curve stepped outside the model's chart domain."""

    def __init__(self, t: float, point):
        self.t = t
        self.point = point
        super().__init__(f"path leaves chart domain at t={t:.6g}, point={point}")


class StepTooCoarse(MppgeoError):
    """Transported data degenerated mid-integration; refine the grid."""


class FrameDegenerate(MppgeoError):
    """The moving frame matrix became numerically singular."""


class NonFiniteState(MppgeoError):
    """State blew up (NaN/inf or magnitude beyond the overflow guard)."""


class NotHorizontal(MppgeoError):
    """gamma_dot - u leaves the horizontal subbundle E beyond tolerance."""

    def __init__(self, t: float, residual: float, tol: float):
        self.t = t
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"velocity minus drift is not in E at t={t:.6g}: "
            f"relative residual {residual:.3e} > {tol:.1e}"
        )


class NonConvergence(MppgeoError):
    """Newton shooting failed; carries the best iterate found."""

    def __init__(self, message: str, best=None, residual_norm: float = float("inf"),
                 iterations: int = 0):
        self.best = best
        self.residual_norm = residual_norm
        self.iterations = iterations
        super().__init__(f"{message} (best residual norm {residual_norm:.3e})")


class SingularJacobian(MppgeoError):
    """Shooting Jacobian condition number exceeded the rank threshold."""

    def __init__(self, cond: float):
        self.cond = cond
        super().__init__(f"shooting Jacobian is numerically singular (cond={cond:.3e})")


class RankDeficient(MppgeoError):
    """Landmark shooting Jacobian is rank deficient (near-singular configuration)."""


class LiftDegenerate(MppgeoError):
    """Horizontal lift is not uniquely solvable at the requested group element."""


class SplittingInvalid(MppgeoError):
    """Lie algebra splitting does not satisfy the required bracket relations."""


class ConfigError(MppgeoError):
    """Invalid experiment configuration."""
