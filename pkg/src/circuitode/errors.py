"""Exception hierarchy shared by all modules."""


class CircuitODEError(Exception):
    """Base class for every error raised by this package."""


class DivisionByZero(CircuitODEError, ZeroDivisionError):
    pass


class UnboundConstant(CircuitODEError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EvaluationSingular(CircuitODEError, ZeroDivisionError):
    pass


class UnknownVariable(CircuitODEError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NoLeader(CircuitODEError, ValueError):
    pass


class MathematicalFailure(CircuitODEError):
    """Elimination ran but could not produce the requested relation."""


class InconsistentSystem(MathematicalFailure):
    pass


class NoRelationFound(MathematicalFailure):
    pass


class NotSolvable(MathematicalFailure):
    pass


class BudgetExceeded(MathematicalFailure):
    def __init__(self, message, partial_chain=None):
        super().__init__(message)
        self.partial_chain = partial_chain


class UnsupportedTranscendental(CircuitODEError, ValueError):
    pass


class NestedTranscendental(UnsupportedTranscendental):
    pass


class UnknownCircuit(CircuitODEError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ParseError(CircuitODEError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class UndeclaredSymbol(ParseError):
    pass


class DuplicateDeclaration(ParseError):
    pass


class InconsistentIC(MathematicalFailure):
    pass


class NonFiniteState(MathematicalFailure):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
