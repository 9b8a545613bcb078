"""LLM backend access: HTTP chat completions, a replay cache, and parsers.

Two interchangeable backends sit behind one ``complete(request)`` contract:

* HttpChatBackend posts to any chat-completions-compatible endpoint (single
  user message, no system message), retries transient failures, and writes
  every completion into the cache.
* ReplayBackend serves completions from the cache only and raises ReplayMiss
  otherwise. All tests run on replay, which makes the whole pipeline
  bit-deterministic.

The cache is one file per request digest: the filename is the hex digest of
(backend, model, temperature, prompt) and the content is the raw completion
text. Identical requests always map to the same file, so concurrent writers
can only race to write identical bytes.

This module also owns parsing of the two structured output formats:
ranked ``Question [k]: .. / Answer: ..`` blocks from question generation, and
unranked ``Question: .. / Answer: ..`` lists from answer extraction.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import socket
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

from .errors import (
    BackendUnreachable,
    GatewayError,
    HttpStatus,
    NoParsableQA,
    ReplayMiss,
    RequestTimeout,
)
from .model import AnswerRecord, AnswerSet, QuestionSet, RankedQuestion, TextSource
from .prompts import UNANSWERABLE
from .textsim import EmbeddingVector

logger = logging.getLogger(__name__)

DEFAULT_BACKEND_ID = "chat"
DEFAULT_MAX_OUTPUT_TOKENS = 2048
DEFAULT_TEMPERATURE = 1e-10


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    model: str = "default"
    backend: str = DEFAULT_BACKEND_ID

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CacheKey:
    """Digest identifying one completion request for caching and replay."""

    digest: str

    @classmethod
    def for_request(cls, request: CompletionRequest) -> "CacheKey":
        canonical = json.dumps(
            {
                "backend": request.backend,
                "model": request.model,
                "temperature": request.temperature,
                "prompt": request.prompt,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return cls(hashlib.sha256(canonical.encode("utf-8")).hexdigest())


class CompletionCache:
    """Directory of raw completion texts keyed by request digest."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)

    def path_for(self, key: CacheKey) -> str:
        return os.path.join(self.directory, key.digest)

    def load(self, key: CacheKey) -> str | None:
        try:
            with open(self.path_for(key), encoding="utf-8") as fh:
                return fh.read()
        except FileNotFoundError:
            return None

    def store(self, key: CacheKey, text: str) -> None:
        # Write-then-rename keeps concurrent identical-key writers safe.
        tmp = self.path_for(key) + f".tmp{os.getpid()}.{threading.get_ident()}"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, self.path_for(key))

    def store_request(self, request: CompletionRequest, text: str) -> None:
        self.store(CacheKey.for_request(request), text)

    def digests(self) -> list[str]:
        return sorted(
            name for name in os.listdir(self.directory) if not name.endswith(".tmp")
        )

    def clear(self) -> int:
        removed = 0
        for name in os.listdir(self.directory):
            os.remove(os.path.join(self.directory, name))
            removed += 1
        return removed


class ReplayBackend:
    """Strict cache-only backend; raises ReplayMiss when nothing is stored."""

    def __init__(self, cache: CompletionCache, backend_id: str = DEFAULT_BACKEND_ID):
        self.cache = cache
        self.backend_id = backend_id

    def complete(self, request: CompletionRequest) -> str:
        key = CacheKey.for_request(request)
        text = self.cache.load(key)
        if text is None:
            raise ReplayMiss(key.digest)
        return text


class HttpChatBackend:
    """Live chat-completions client with retry and cache write-through.

    Retries (transport errors, 429, and 5xx only) use exponential backoff
    starting at ``backoff_base`` seconds and doubling per attempt.
    """

    def __init__(
        self,
        base_url: str,
        *,
        api_key: str | None = None,
        cache: CompletionCache | None = None,
        timeout: float = 60.0,
        retries: int = 3,
        backoff_base: float = 1.0,
        backend_id: str = DEFAULT_BACKEND_ID,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get("SUMEVAL_API_KEY")
        self.cache = cache
        self.timeout = timeout
        self.retries = retries
        self.backoff_base = backoff_base
        self.backend_id = backend_id

    def complete(self, request: CompletionRequest) -> str:
        payload = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        body = _post_json_with_retries(
            f"{self.base_url}/chat/completions",
            payload,
            api_key=self.api_key,
            timeout=self.timeout,
            retries=self.retries,
            backoff_base=self.backoff_base,
        )
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"unexpected completion response shape: {exc}") from exc
        if self.cache is not None:
            self.cache.store_request(request, text)
        return text


def _post_json_with_retries(url, payload, *, api_key, timeout, retries, backoff_base):
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    data = json.dumps(payload).encode("utf-8")
    last_error: GatewayError | None = None
    for attempt in range(max(1, retries)):
        if attempt and backoff_base > 0:
            time.sleep(backoff_base * (2 ** (attempt - 1)))
        req = urllib.request.Request(url, data=data, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            detail = ""
            try:
                detail = exc.read().decode("utf-8", "replace")[:200]
            except Exception:
                pass
            error = HttpStatus(exc.code, detail)
            if exc.code == 429 or exc.code >= 500:
                last_error = error
                continue
            raise error from exc
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                last_error = RequestTimeout(str(exc.reason))
            else:
                last_error = BackendUnreachable(str(exc.reason))
            continue
        except (socket.timeout, TimeoutError) as exc:
            last_error = RequestTimeout(str(exc))
            continue
        except json.JSONDecodeError as exc:
            raise GatewayError(f"backend returned invalid JSON: {exc}") from exc
    assert last_error is not None
    raise last_error


# --- embeddings ----------------------------------------------------------------


class HashEmbedder:
    """Deterministic stub embedder: hashed character 3-grams, L2-normalized.

    The text is wrapped in boundary markers so even one-character inputs
    produce a gram. Each gram lands in one of ``dim`` buckets chosen by a
    keyed blake2b hash, so the mapping is stable across processes.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim

    def bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dim

    def buckets(self, text: str) -> set[int]:
        padded = f"<{text}>"
        return {self.bucket(padded[i : i + 3]) for i in range(max(1, len(padded) - 2))}

    def __call__(self, text: str) -> EmbeddingVector:
        values = [0.0] * self.dim
        padded = f"<{text}>"
        for i in range(max(1, len(padded) - 2)):
            values[self.bucket(padded[i : i + 3])] += 1.0
        norm = sum(v * v for v in values) ** 0.5
        if norm > 0:
            values = [v / norm for v in values]
        return EmbeddingVector(tuple(values))


class HttpEmbedder:
    """Live embeddings-endpoint client (OpenAI-style /embeddings)."""

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        api_key: str | None = None,
        timeout: float = 60.0,
        retries: int = 3,
        backoff_base: float = 1.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get("SUMEVAL_API_KEY")
        self.timeout = timeout
        self.retries = retries
        self.backoff_base = backoff_base

    def __call__(self, text: str) -> EmbeddingVector:
        body = _post_json_with_retries(
            f"{self.base_url}/embeddings",
            {"model": self.model, "input": text},
            api_key=self.api_key,
            timeout=self.timeout,
            retries=self.retries,
            backoff_base=self.backoff_base,
        )
        try:
            return EmbeddingVector(tuple(float(v) for v in body["data"][0]["embedding"]))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendUnreachable(f"unexpected embedding response shape: {exc}") from exc


class LlmGateway:
    """Facade bundling a completion backend, an embedder, and request defaults.

    A bounded semaphore throttles in-flight completions so batch fan-out can
    use many worker threads without flooding the backend.
    """

    def __init__(
        self,
        backend,
        *,
        model: str = "default",
        temperature: float = DEFAULT_TEMPERATURE,
        max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS,
        embedder=None,
        max_in_flight: int = 4,
    ):
        self.backend = backend
        self.model = model
        self.temperature = temperature
        self.max_output_tokens = max_output_tokens
        self.embedder = embedder if embedder is not None else HashEmbedder()
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))

    def request_for(
        self,
        prompt: str,
        *,
        temperature: float | None = None,
        max_output_tokens: int | None = None,
    ) -> CompletionRequest:
        return CompletionRequest(
            prompt=prompt,
            temperature=self.temperature if temperature is None else temperature,
            max_output_tokens=(
                self.max_output_tokens if max_output_tokens is None else max_output_tokens
            ),
            model=self.model,
            backend=getattr(self.backend, "backend_id", DEFAULT_BACKEND_ID),
        )

    def complete(
        self,
        prompt: str,
        *,
        temperature: float | None = None,
        max_output_tokens: int | None = None,
    ) -> str:
        request = self.request_for(
            prompt, temperature=temperature, max_output_tokens=max_output_tokens
        )
        with self._slots:
            return self.backend.complete(request)

    def embed(self, text: str) -> EmbeddingVector:
        return self.embedder(text)


# --- structured output parsing ---------------------------------------------------

# Markers may carry light list decorations ("- ", "3. ", "> ") before them.
_RANKED_Q_RE = re.compile(
    r"^[\W\d]{0,6}question\s*\[\s*(\d+)\s*\]\s*:\s*(.*?)\s*$", re.I
)
_PLAIN_Q_RE = re.compile(
    r"^[\W\d]{0,6}question(?:\s*\[\s*\d+\s*\])?\s*:\s*(.*?)\s*$", re.I
)
_ANSWER_RE = re.compile(r"^[\W\d]{0,6}answer\s*:\s*(.*?)\s*$", re.I)

_ALNUM_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _normalize(text: str) -> str:
    """Collapse a question or answer to its lowercase alphanumeric tokens."""
    return " ".join(_ALNUM_RE.findall(text.lower()))


def _is_unanswerable(answer: str) -> bool:
    return _normalize(answer).replace(" ", "") == UNANSWERABLE.lower()


def _scan_pairs(raw: str, question_re) -> list[tuple[re.Match, str, str]]:
    """Collect (question_match, question_text, answer_text) triples line by line.

    A field (question or answer) accumulates continuation lines until a blank
    line or the next field marker closes it. Prose outside any open field is
    ignored, so lead-ins and trailing commentary do not leak into answers. A
    question with no following answer keeps an empty answer (truncated
    completions end this way).
    """
    pairs: list[tuple[re.Match, str, str]] = []
    q_match: re.Match | None = None
    q_parts: list[str] = []
    a_parts: list[str] = []
    open_field: str | None = None  # "q", "a", or None

    def flush():
        nonlocal q_match, q_parts, a_parts, open_field
        if q_match is not None and " ".join(q_parts).strip():
            pairs.append(
                (q_match, " ".join(q_parts).strip(), " ".join(a_parts).strip())
            )
        q_match, q_parts, a_parts, open_field = None, [], [], None

    for line in raw.splitlines():
        qm = question_re.match(line)
        am = _ANSWER_RE.match(line)
        if qm:
            flush()
            q_match = qm
            q_parts = [qm.group(qm.re.groups)]
            open_field = "q"
        elif am:
            if q_match is not None and not a_parts:
                a_parts = [am.group(1)]
                open_field = "a"
            else:
                flush()  # stray answer with no question to attach to
        elif not line.strip() or not _ALNUM_RE.search(line):
            # Blank and punctuation-only lines (rules, code fences) close
            # whatever field was open.
            open_field = None
        elif open_field == "a":
            a_parts.append(line.strip())
        elif open_field == "q":
            q_parts.append(line.strip())
    flush()
    return pairs


def parse_qa_block(raw: str) -> list[tuple[RankedQuestion, str]]:
    """Parse ``Question [k]: .. / Answer: ..`` pairs out of a completion.

    Tolerates surrounding prose, blank lines, and out-of-order ranks. Output
    is sorted by claimed rank (stable, so the first occurrence of a duplicate
    rank comes first) and then renumbered contiguously from 1; no parsed
    question is dropped. Raises NoParsableQA when nothing matches.
    """
    found = _scan_pairs(raw, _RANKED_Q_RE)
    if not found:
        raise NoParsableQA("no ranked question/answer pairs found")
    by_rank = sorted(found, key=lambda item: int(item[0].group(1)))
    return [
        (RankedQuestion(rank=i + 1, question=q_text), a_text)
        for i, (_, q_text, a_text) in enumerate(by_rank)
    ]


def format_qa_block(pairs: list[tuple[RankedQuestion, str]]) -> str:
    """Inverse of parse_qa_block for well-formed pair lists."""
    lines = []
    for question, answer in pairs:
        lines.append(f"Question [{question.rank}]: {question.question}")
        lines.append(f"Answer: {answer}")
    return "\n".join(lines)


def parse_answer_list(raw: str, questions: QuestionSet) -> AnswerSet:
    """Align parsed ``Question: .. / Answer: ..`` pairs to the input questions.

    Pairs are matched to questions by normalized question text first and by
    position among the leftovers second. Answers equal to the UNANSWERABLE
    sentinel after trimming, lowercasing, and punctuation stripping become the
    unanswerable variant, as do questions with no parsed answer at all.
    """
    if len(questions) == 0:
        raise ValueError("questions must be non-empty")
    found = _scan_pairs(raw, _PLAIN_Q_RE)
    if not found:
        raise NoParsableQA("no question/answer pairs found")

    answers: dict[int, str] = {}
    norm_to_indices: dict[str, list[int]] = {}
    for idx, q in enumerate(questions.questions):
        norm_to_indices.setdefault(_normalize(q.question), []).append(idx)

    leftovers: list[str] = []
    for _, q_text, a_text in found:
        indices = norm_to_indices.get(_normalize(q_text))
        if indices:
            answers[indices.pop(0)] = a_text
        else:
            leftovers.append(a_text)
    unmatched = [i for i in range(len(questions)) if i not in answers]
    for idx, a_text in zip(unmatched, leftovers):
        answers[idx] = a_text

    records = []
    for idx, q in enumerate(questions.questions):
        text = answers.get(idx, "")
        if not text.strip() or _is_unanswerable(text):
            records.append(AnswerRecord(question=q, answer=None))
        else:
            records.append(AnswerRecord(question=q, answer=text))
    source = (
        TextSource.SUMMARY
        if questions.origin is TextSource.DOCUMENT
        else TextSource.DOCUMENT
    )
    return AnswerSet(source=source, records=tuple(records))
