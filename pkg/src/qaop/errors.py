"""Exception and warning types shared across the package."""


class QaopError(Exception):
    """Base class for all errors raised by qaop."""


class InvalidInputError(QaopError, ValueError):
    pass


class InvalidParameterError(QaopError, ValueError):
    pass


class DecompositionError(QaopError, ArithmeticError):
    """Cholesky factorization hit a nonpositive pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix is not positive definite: pivot {pivot} is {value:.3e}")


class RankDeficiencyError(QaopError, ArithmeticError):
    def __init__(self, message: str, deficient: int = 0):
        self.deficient = deficient
        super().__init__(message)


class InvalidStateError(QaopError, ArithmeticError):
    pass


class InvalidGateError(QaopError, ValueError):
    pass


class InvalidOracleError(QaopError, ValueError):
    pass


class ImpossibleOutcomeError(QaopError, ArithmeticError):
    pass


class ConfigurationError(QaopError, ValueError):
    pass


class DomainError(QaopError, ValueError):
    pass


class ResourceRefusal(QaopError):
    """A requested simulation exceeds the configured qubit budget."""

    def __init__(self, qubits: int, budget: int):
        self.qubits = qubits
        self.budget = budget
        super().__init__(f"gate-level run needs {qubits} qubits, budget is {budget}")


class ConditioningWarning(UserWarning):
    pass


class ParseError(InvalidInputError):
    """Malformed input file; ``row`` and ``column`` are 1-based when known."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" at row {row}" + (f", column {column}" if column is not None else "")
        super().__init__(message + where)
