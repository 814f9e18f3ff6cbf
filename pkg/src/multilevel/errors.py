"""Error taxonomy shared by the kernel, store, runner, and converter.

Every error exposes a stable ``code`` (the class name) that the HTTP layer
embeds verbatim in error bodies, so clients can match on it.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- kernel ---------------------------------------------------------------

class ModelError(EngineError):
    pass


class DuplicateIdentifier(ModelError):
    pass


class UnknownEntity(ModelError):
    pass


class UnknownDeclaration(ModelError):
    pass


class UnknownDatatype(ModelError):
    pass


class NonPositivePotency(ModelError):
    pass


class BadCardinality(ModelError):
    pass


class InstanceOfCycle(ModelError):
    pass


class SpecialisationCycle(ModelError):
    pass


class ConflictingFact(ModelError):
    pass


class ValueAtWrongOrder(ModelError):
    pass


class TypeMismatch(ModelError):
    pass


class TargetTypeMismatch(ModelError):
    pass


class PositionOnUnordered(ModelError):
    pass


class MissingPosition(ModelError):
    pass


class ReferenceNotResolvable(ModelError):
    pass


class TargetInUse(ModelError):
    pass


# --- store ----------------------------------------------------------------

class StoreError(EngineError):
    pass


class ConnectionFailure(StoreError):
    pass


class PermissionDenied(StoreError):
    pass


class SqlError(StoreError):
    pass


class WriteAttempted(StoreError):
    pass


class UnknownTable(StoreError):
    pass


# --- function execution ----------------------------------------------------

class ExecutionError(EngineError):
    pass


class NotAFunction(ExecutionError):
    pass


class CyclicSteps(ExecutionError):
    pass


class MalformedAction(ExecutionError):
    pass


class ActionFailed(ExecutionError):
    """Raised when an HTTP action fails mid-run; carries the partial result."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


# --- conversion -------------------------------------------------------------

class ConvertError(EngineError):
    pass


class BadPattern(ConvertError):
    pass


class NotAConversion(ConvertError):
    pass


class MissingRoot(ConvertError):
    pass


class RecursionLimit(ConvertError):
    pass
