"""Exception hierarchy shared by all qfine modules."""


class QfineError(Exception):
    """Base class for all qfine errors."""


class DimensionMismatch(QfineError):
    pass


class CommutationViolation(QfineError):
    def __init__(self, i, j, residual, tol):
        self.pair = (i, j)
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"components T{i} and T{j} do not commute: "
            f"relative residual {residual:.3e} > tol {tol:.3e}"
        )


class SingularOperator(QfineError):
    def __init__(self, cond, cap):
        self.cond = cond
        self.cap = cap
        super().__init__(f"estimated condition number {cond:.3e} exceeds cap {cap:.3e}")


class EigenSolverFailure(QfineError):
    pass


class SpectrumHit(QfineError):
    def __init__(self, s, distance, tol=1e-8):
        self.s = s
        self.distance = distance
        super().__init__(
            f"point at slice-distance {distance:.3e} from the S-spectrum (tol {tol:.1e})"
        )


class SphereCollision(QfineError):
    pass


class PoleProximity(QfineError):
    pass


class NotIntrinsic(QfineError):
    pass


class MissingValueAtInfinity(QfineError):
    pass


class CannotSeparate(QfineError):
    pass


class KernelSingularity(QfineError):
    pass


class NoConvergence(QfineError):
    """Adaptive quadrature hit the node cap.

    Carries the last two iterates and their relative gap so callers can
    inspect how far the doubling sequence got.
    """

    def __init__(self, last, prev, gap, nodes):
        self.last = last
        self.prev = prev
        self.gap = gap
        self.nodes = nodes
        super().__init__(
            f"quadrature did not converge: gap {gap:.3e} at {nodes} nodes"
        )


class PreconditionViolated(QfineError):
    """A functional-calculus gate failed; `condition` names the failed gate."""

    def __init__(self, condition, detail=""):
        self.condition = condition
        msg = f"precondition violated: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
