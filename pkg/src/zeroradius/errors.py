"""Exception types shared across the solvers and the CLI."""


class ProblemFormatError(ValueError):
    """A problem file violates the schema; ``issues`` lists every violation."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))


class InfeasiblePatternError(ValueError):
    """No perturbation under the given pattern can create an invariant zero."""

    def __init__(self, message, reason=None):
        self.reason = reason
        super().__init__(message)


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget; ``best`` holds the last iterate."""

    def __init__(self, message, best=None, history=None):
        self.best = best
        self.history = history
        super().__init__(message)


class WitnessSearchError(RuntimeError):
    """No witness vector satisfying the optimality conditions was found."""
