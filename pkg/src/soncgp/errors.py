"""Exception hierarchy shared by all modules."""


class SoncError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SoncError, ValueError):
    pass


class PolynomialSyntaxError(SoncError, ValueError):
    """Malformed polynomial text; ``position`` is the 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class VariableOutOfRange(SoncError, ValueError):
    pass


class DegenerateSimplex(SoncError):
    pass


class NotInSimplex(SoncError):
    pass


class DegenerateSupport(SoncError):
    pass


class NotSTForm(SoncError):
    """The polynomial is not a simplex-tail polynomial."""


class NotSimplex(NotSTForm):
    pass


class ClubsuitViolated(NotSTForm):
    """A hull vertex is odd or carries a non-positive coefficient."""


class NoTailTerm(SoncError):
    pass


class NegativeExponent(SoncError, ValueError):
    pass


class ReconstructionFailure(SoncError):
    pass


class SolverFailure(SoncError):
    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class NoStartingPoint(SolverFailure):
    pass


class HypothesisViolated(SoncError):
    """A vertex coefficient form has more than one strictly positive term."""

    def __init__(self, message: str, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class TailNotCovered(SoncError):
    pass


class TargetNotVertex(SoncError):
    pass
