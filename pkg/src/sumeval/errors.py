"""Exception taxonomy shared across the toolkit.

Everything raised on purpose derives from SumevalError so callers can split
"our" failures from genuine bugs. GatewayError groups the transport-level
failures that the CLI maps to exit code 2.
"""


class SumevalError(Exception):
    """Base class for all toolkit errors."""


class InvalidConfig(SumevalError):
    """A configuration invariant was violated; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# --- text similarity ---------------------------------------------------------


class DimensionMismatch(SumevalError):
    """Embedding vectors of different dimensionality were compared."""


class ZeroVector(SumevalError):
    """Cosine similarity is undefined when both vectors have zero norm."""


class MissingEmbedder(SumevalError):
    """Cosine similarity was requested without an embedding function."""


# --- LLM gateway -------------------------------------------------------------


class GatewayError(SumevalError):
    """Base class for backend transport and replay failures."""


class BackendUnreachable(GatewayError):
    """The completion or embedding endpoint could not be reached."""


class ReplayMiss(GatewayError):
    """Strict replay found no cached completion for the request digest."""

    def __init__(self, digest: str):
        super().__init__(f"no cached completion for digest {digest}")
        self.digest = digest


class HttpStatus(GatewayError):
    """The backend answered with a non-success HTTP status."""

    def __init__(self, code: int, detail: str = ""):
        super().__init__(f"HTTP {code}" + (f": {detail}" if detail else ""))
        self.code = code


class RequestTimeout(GatewayError):
    """The backend did not answer within the configured timeout."""


class MissingSlot(SumevalError):
    """A prompt template placeholder was left unfilled."""

    def __init__(self, name: str):
        super().__init__(f"unfilled template slot: {name}")
        self.name = name


class NoParsableQA(SumevalError):
    """A completion contained no recoverable question/answer pairs."""


# --- evaluation and refinement -----------------------------------------------


class EmptyQuestionSet(SumevalError):
    """Question generation yielded zero usable questions."""


class EmptyFeedback(SumevalError):
    """Feedback construction was asked to render an empty deficiency list."""


class EmptyRevision(SumevalError):
    """A refinement completion came back blank."""


class RefinementError(SumevalError):
    """A refinement loop failed partway; carries the trace built so far."""

    def __init__(self, message: str, trace):
        super().__init__(message)
        self.trace = trace


# --- meta-evaluation ----------------------------------------------------------


class DegenerateInput(SumevalError):
    """Rank statistics are undefined on all-tied or too-short vectors."""


class InsufficientData(SumevalError):
    """Agreement is undefined when no unit carries two or more ratings."""


# --- harness -------------------------------------------------------------------


class CorpusError(SumevalError):
    """Base class for corpus ingestion failures.

    ``rejects`` lists every (line_number, reason) gathered in one pass so a
    single run surfaces all bad lines, not just the first.
    """

    def __init__(self, message: str, rejects=()):
        super().__init__(message)
        self.rejects = list(rejects)


class ParseError(CorpusError):
    """A corpus line was not valid or was missing required fields."""


class DuplicateKey(CorpusError):
    """Two corpus lines share the same (doc_id, system_id)."""


class EmptyCorpus(SumevalError):
    """Statistics were requested over zero records."""
