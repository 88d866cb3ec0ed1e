"""Exception types shared across the toolkit."""


class FormgraphError(Exception):
    """Base class for all formgraph errors."""


# --- DOM / form model ---

class EmptyDocument(FormgraphError):
    """No element could be recovered from the input document."""


class NoFormFound(FormgraphError):
    """The requested form selector did not match any form."""


class NoInputFields(FormgraphError):
    """The selected form contains no free-form input fields."""


# --- embeddings ---

class ProviderUnavailable(FormgraphError):
    """A text embedding provider could not be reached."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class GraphTooSmall(FormgraphError):
    """Structural embedding needs at least two nodes."""


class DimensionMismatch(FormgraphError):
    """Vectors of different dimensionality were combined."""


# --- ferg ---

class MissingEmbedding(FormgraphError):
    """A graph node has no embedding in the supplied space."""


class UnknownNode(FormgraphError):
    """A node id does not exist in the graph."""


# --- constraints ---

class ConstraintSyntaxError(FormgraphError):
    """Malformed expect-chain text."""


class UnknownTemplate(FormgraphError):
    """A constraint name has no catalog match within the mapping bound."""


class NotNegatable(FormgraphError):
    """Free-text constraints cannot be negated."""


class UnboundFieldReference(FormgraphError):
    """A constraint references a field with no bound value."""


# --- llm bridge ---

class BackendUnavailable(FormgraphError):
    """The completion backend could not be reached."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ContextTooLarge(FormgraphError):
    """The backend rejected the prompt for exceeding its context size."""


class MalformedResponse(FormgraphError):
    """The backend response could not be parsed after a reprompt."""


class NoConstraintFound(FormgraphError):
    """No expect-chain could be located in a response."""


class NoValueFound(FormgraphError):
    """No value could be extracted from a response."""


# --- submission ---

class ExecutorFailure(FormgraphError):
    """Navigation, fill, or submit failed at the executor."""


class InvalidAssignment(FormgraphError):
    """An assignment keys a field that the form model does not contain."""


# --- simulator ---

class SchemaError(FormgraphError):
    """A form spec or test plan document violates its schema."""


class DanglingFieldReference(FormgraphError):
    """A simulator rule references an unknown field."""


# --- pipeline ---

class ValueGenerationFailed(FormgraphError):
    """No value satisfying a constraint set could be produced."""

    def __init__(self, field: str, message: str = ""):
        super().__init__(message or f"value generation failed for field {field!r}")
        self.field = field


class NoPassingAssignment(FormgraphError):
    """The feedback loop hit its iteration cap without a successful submission."""


class TruthUnavailable(FormgraphError):
    """Coverage against ground truth requires a simulator spec."""
