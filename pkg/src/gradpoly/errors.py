"""Exception hierarchy shared by all modules."""


class GradPolyError(Exception):
    """Base class for all package errors."""


class SingularMatrix(GradPolyError):
    pass


class NonPositiveJacobian(GradPolyError):
    """Raised when det F <= 0 (or J <= 0) where the energy is infinite.

    ``where`` optionally carries (element, quadrature point) indices.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class InvalidMeshSpec(GradPolyError):
    pass


class InvalidQuadrature(GradPolyError):
    pass


class InvertedElement(GradPolyError):
    pass


class InconsistentBC(GradPolyError):
    pass


class NoConvergence(GradPolyError):
    pass


class LinearSolveFailure(GradPolyError):
    pass


class LaminateUndefined(GradPolyError):
    pass


class IncomparableRuns(GradPolyError):
    pass


class ConfigError(GradPolyError):
    """Collects every problem found while parsing a run configuration.

    ``problems`` is a list of ``(kind, line, message)`` tuples where ``kind``
    is one of ``UnknownKey``, ``TypeMismatch``, ``MissingRequired``,
    ``InvalidValue`` or ``SyntaxError``; ``line`` is 1-based or ``None``.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{kind} (line {line}): {msg}" if line else f"{kind}: {msg}"
                 for kind, line, msg in self.problems]
        super().__init__("; ".join(lines))
