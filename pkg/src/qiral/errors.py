"""Exception hierarchy shared by every compiler stage."""

from __future__ import annotations


class QiralError(Exception):
    """Base class; `loc` is a source location when one is known."""

    def __init__(self, message: str, loc=None):
        super().__init__(message)
        self.message = message
        self.loc = loc

    def __str__(self) -> str:
        name = type(self).__name__
        if self.loc is not None:
            return f"{self.loc}: {name}: {self.message}"
        return f"{name}: {self.message}"


class SyntaxError_(QiralError):
    pass


class DuplicateName(QiralError):
    pass


class ShapeMismatch(QiralError):
    pass


class UnboundSymbol(QiralError):
    pass


class ProgramErrors(QiralError):
    """Several accumulated diagnostics."""

    def __init__(self, errors: list[QiralError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = list(errors)

    def __str__(self) -> str:
        return "\n".join(str(e) for e in self.errors)


class FuelExhausted(QiralError):
    pass


class NoMatch(QiralError):
    pass


class RequirementUnprovable(QiralError):
    def __init__(self, message: str, predicate=None, normal_form=None, loc=None):
        super().__init__(message, loc)
        self.predicate = predicate
        self.normal_form = normal_form


class UnknownAlgorithm(QiralError):
    pass


class ResidualInverse(QiralError):
    def __init__(self, message: str, statements=()):
        super().__init__(message)
        self.statements = list(statements)


class UnloweredConstruct(QiralError):
    pass


class RaceDetected(QiralError):
    pass


class UnboundKernel(QiralError):
    pass


class CompileFailed(QiralError):
    def __init__(self, message: str, diagnostics: str = ""):
        super().__init__(message)
        self.diagnostics = diagnostics


class RuntimeMismatch(QiralError):
    pass


class NonFiniteValue(QiralError):
    pass


class OddExtent(QiralError):
    pass


class SizeGuardExceeded(QiralError):
    pass


class UnboundAtom(QiralError):
    pass


class Singular(QiralError):
    pass
