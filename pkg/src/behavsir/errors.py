class BehavsirError(Exception):
    """Base class for package errors."""


class ValidationError(BehavsirError, ValueError):
    """Invalid configuration; ``problems`` lists every issue found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ScheduleError(ValidationError):
    """A cost schedule violates ordering or the lower cost bound."""


class OutOfRangeError(BehavsirError, ValueError):
    """Time outside the domain of a tabulated path."""


class NumericalError(BehavsirError, RuntimeError):
    def __init__(self, message, t=None):
        self.t = t
        if t is not None:
            message = f"{message} at t={t:.12g}"
        super().__init__(message)


class InfeasiblePathError(BehavsirError, ValueError):
    """Target transmission path reaches or exceeds ``beta``."""

    def __init__(self, intervals, beta):
        self.intervals = list(intervals)
        spans = ", ".join(f"[{a:.12g}, {b:.12g}]" for a, b in self.intervals)
        super().__init__(f"target transmission >= beta*(1-margin) (beta={beta:.12g}) on {spans}")
