"""Core domain types: documents, summaries, questions, answers, reports, configs.

All types are immutable values after construction and safe to share across
threads. Substantive-vs-unanswerable answers are modelled with ``str | None``
(``None`` is the closed unanswerable sentinel) so no downstream logic ever
string-matches "UNANSWERABLE"; only the gateway's answer parser produces the
sentinel.

Every type serializes through ``to_dict`` / ``from_dict`` with plain JSON
values, and deserializing is an exact inverse.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass, field

from .errors import InvalidConfig


class TextSource(enum.Enum):
    """Which side of the document/summary pair a set was derived from."""

    DOCUMENT = "document"
    SUMMARY = "summary"


class SimilarityMeasure(enum.Enum):
    EMPM = "empm"
    ROUGE1_F1 = "rouge"
    COSINE = "cossim"


class FeedbackKind(enum.Enum):
    COVERAGE = "coverage"
    CONSISTENCY = "consistency"


class Termination(enum.Enum):
    THRESHOLDS_MET = "thresholds_met"
    MAX_ITERS_REACHED = "max_iters_reached"


def count_words(text: str) -> int:
    """Whitespace-delimited token count after NFC normalization.

    Used only for corpus statistics, never for scoring.
    """
    return len(unicodedata.normalize("NFC", text).split())


@dataclass(frozen=True)
class DocumentText:
    """A source document. ``word_count`` is derived, never supplied."""

    id: str
    text: str
    word_count: int = field(init=False)

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("document text must be non-empty")
        object.__setattr__(self, "word_count", count_words(self.text))

    def to_dict(self) -> dict:
        return {"id": self.id, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict) -> "DocumentText":
        return cls(id=d["id"], text=d["text"])


@dataclass(frozen=True)
class SummaryText:
    """A summary of one document at a given refinement generation (0 = initial)."""

    id: str
    source_id: str
    text: str
    generation: int = 0

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("summary text must be non-empty")
        if self.generation < 0:
            raise ValueError("generation must be non-negative")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_id": self.source_id,
            "text": self.text,
            "generation": self.generation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryText":
        return cls(
            id=d["id"],
            source_id=d["source_id"],
            text=d["text"],
            generation=d["generation"],
        )


@dataclass(frozen=True, order=True)
class RankedQuestion:
    """A generated question with its importance rank (1 = most important)."""

    rank: int
    question: str

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if not self.question.strip():
            raise ValueError("question must be non-empty")

    def to_dict(self) -> dict:
        return {"rank": self.rank, "question": self.question}

    @classmethod
    def from_dict(cls, d: dict) -> "RankedQuestion":
        return cls(rank=d["rank"], question=d["question"])


@dataclass(frozen=True)
class QuestionSet:
    """An ordered, contiguously ranked question list from one text source."""

    origin: TextSource
    questions: tuple[RankedQuestion, ...]

    def __post_init__(self):
        object.__setattr__(self, "questions", tuple(self.questions))
        ranks = [q.rank for q in self.questions]
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError("ranks must be unique and contiguous from 1")

    def __len__(self) -> int:
        return len(self.questions)

    def to_dict(self) -> dict:
        return {
            "origin": self.origin.value,
            "questions": [q.to_dict() for q in self.questions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuestionSet":
        return cls(
            origin=TextSource(d["origin"]),
            questions=tuple(RankedQuestion.from_dict(q) for q in d["questions"]),
        )


@dataclass(frozen=True)
class AnswerRecord:
    """An extracted answer for one question; ``answer is None`` means unanswerable."""

    question: RankedQuestion
    answer: str | None

    def __post_init__(self):
        if self.answer is not None and not self.answer.strip():
            raise ValueError("substantive answers must be non-empty; use None")

    @property
    def is_answered(self) -> bool:
        return self.answer is not None

    def to_dict(self) -> dict:
        return {"question": self.question.to_dict(), "answer": self.answer}

    @classmethod
    def from_dict(cls, d: dict) -> "AnswerRecord":
        return cls(question=RankedQuestion.from_dict(d["question"]), answer=d["answer"])


@dataclass(frozen=True)
class AnswerSet:
    """One AnswerRecord per input question, in question order."""

    source: TextSource
    records: tuple[AnswerRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def to_dict(self) -> dict:
        return {
            "source": self.source.value,
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnswerSet":
        return cls(
            source=TextSource(d["source"]),
            records=tuple(AnswerRecord.from_dict(r) for r in d["records"]),
        )


@dataclass(frozen=True)
class ConsistencyTriplet:
    """A fact that failed the similarity gate: question, both answers, score.

    ``document_answer is None`` means the document could not answer the
    question at all (the claim is unsupported, similarity 0).
    """

    question: str
    summary_answer: str
    document_answer: str | None
    similarity: float

    def __post_init__(self):
        if not 0.0 <= self.similarity <= 1.0:
            raise ValueError("similarity must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "summary_answer": self.summary_answer,
            "document_answer": self.document_answer,
            "similarity": self.similarity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConsistencyTriplet":
        return cls(
            question=d["question"],
            summary_answer=d["summary_answer"],
            document_answer=d["document_answer"],
            similarity=d["similarity"],
        )


@dataclass(frozen=True)
class Diagnostics:
    """The raw quantities both scores were computed from.

    Storing these makes every report self-verifying: the coverage score must
    equal answerable_count / doc_question_count and the consistency score must
    be reproducible from fact_similarities and tau.
    """

    doc_question_count: int
    answerable_count: int
    summary_question_count: int
    fact_similarities: tuple[float, ...]
    tau: float
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "fact_similarities", tuple(self.fact_similarities))
        object.__setattr__(self, "notes", tuple(self.notes))

    def to_dict(self) -> dict:
        return {
            "doc_question_count": self.doc_question_count,
            "answerable_count": self.answerable_count,
            "summary_question_count": self.summary_question_count,
            "fact_similarities": list(self.fact_similarities),
            "tau": self.tau,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Diagnostics":
        return cls(
            doc_question_count=d["doc_question_count"],
            answerable_count=d["answerable_count"],
            summary_question_count=d["summary_question_count"],
            fact_similarities=tuple(d["fact_similarities"]),
            tau=d["tau"],
            notes=tuple(d["notes"]),
        )


@dataclass(frozen=True)
class EvaluationReport:
    """Scores plus the structured feedback that explains them.

    coverage_feedback lists the document questions the summary could not
    answer; consistency_feedback lists the facts whose summary/document
    answers failed the similarity gate.
    """

    coverage_score: float
    consistency_score: float
    coverage_feedback: tuple[RankedQuestion, ...]
    consistency_feedback: tuple[ConsistencyTriplet, ...]
    diagnostics: Diagnostics

    def __post_init__(self):
        object.__setattr__(self, "coverage_feedback", tuple(self.coverage_feedback))
        object.__setattr__(
            self, "consistency_feedback", tuple(self.consistency_feedback)
        )

    def to_dict(self) -> dict:
        return {
            "coverage_score": self.coverage_score,
            "consistency_score": self.consistency_score,
            "coverage_feedback": [q.to_dict() for q in self.coverage_feedback],
            "consistency_feedback": [t.to_dict() for t in self.consistency_feedback],
            "diagnostics": self.diagnostics.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            coverage_score=d["coverage_score"],
            consistency_score=d["consistency_score"],
            coverage_feedback=tuple(
                RankedQuestion.from_dict(q) for q in d["coverage_feedback"]
            ),
            consistency_feedback=tuple(
                ConsistencyTriplet.from_dict(t) for t in d["consistency_feedback"]
            ),
            diagnostics=Diagnostics.from_dict(d["diagnostics"]),
        )


@dataclass(frozen=True)
class EvalConfig:
    """Knobs for one evaluation run. Defaults match the operating point the
    refinement experiments use."""

    tau: float = 0.6
    similarity: SimilarityMeasure = SimilarityMeasure.ROUGE1_F1
    doc_question_range: tuple[int, int] = (6, 12)
    summary_question_range: tuple[int, int] = (4, 10)
    top_k: int | None = None
    temperature: float = 1e-10
    random_seed: int = 0

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "similarity": self.similarity.value,
            "doc_question_range": list(self.doc_question_range),
            "summary_question_range": list(self.summary_question_range),
            "top_k": self.top_k,
            "temperature": self.temperature,
            "random_seed": self.random_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalConfig":
        return cls(
            tau=d["tau"],
            similarity=SimilarityMeasure(d["similarity"]),
            doc_question_range=tuple(d["doc_question_range"]),
            summary_question_range=tuple(d["summary_question_range"]),
            top_k=d["top_k"],
            temperature=d["temperature"],
            random_seed=d["random_seed"],
        )


@dataclass(frozen=True)
class RefineConfig:
    """Refinement-loop thresholds and iteration budget."""

    t_cov: float = 0.60
    t_cons: float = 0.73
    max_iters: int = 3

    def to_dict(self) -> dict:
        return {"t_cov": self.t_cov, "t_cons": self.t_cons, "max_iters": self.max_iters}

    @classmethod
    def from_dict(cls, d: dict) -> "RefineConfig":
        return cls(t_cov=d["t_cov"], t_cons=d["t_cons"], max_iters=d["max_iters"])


@dataclass(frozen=True)
class FeedbackText:
    """Natural-language feedback rendered from one report's deficiency list."""

    kind: FeedbackKind
    body: str

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "body": self.body}

    @classmethod
    def from_dict(cls, d: dict) -> "FeedbackText":
        return cls(kind=FeedbackKind(d["kind"]), body=d["body"])


@dataclass(frozen=True)
class RefinementTrace:
    """Everything a refinement loop produced, in iteration order.

    summaries[i+1] exists only because reports[i] failed a threshold; when the
    loop stops on the iteration budget the last summary has no report of its
    own (``final_summary_evaluated`` is False).
    """

    summaries: tuple[SummaryText, ...]
    reports: tuple[EvaluationReport, ...]
    rendered_feedback: tuple[FeedbackText, ...]
    termination: Termination

    def __post_init__(self):
        object.__setattr__(self, "summaries", tuple(self.summaries))
        object.__setattr__(self, "reports", tuple(self.reports))
        object.__setattr__(self, "rendered_feedback", tuple(self.rendered_feedback))

    @property
    def final_summary(self) -> SummaryText:
        return self.summaries[-1]

    @property
    def final_summary_evaluated(self) -> bool:
        return len(self.reports) == len(self.summaries)

    def to_dict(self) -> dict:
        return {
            "summaries": [s.to_dict() for s in self.summaries],
            "reports": [r.to_dict() for r in self.reports],
            "rendered_feedback": [f.to_dict() for f in self.rendered_feedback],
            "termination": self.termination.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RefinementTrace":
        return cls(
            summaries=tuple(SummaryText.from_dict(s) for s in d["summaries"]),
            reports=tuple(EvaluationReport.from_dict(r) for r in d["reports"]),
            rendered_feedback=tuple(
                FeedbackText.from_dict(f) for f in d["rendered_feedback"]
            ),
            termination=Termination(d["termination"]),
        )


def validate_config(cfg: EvalConfig) -> None:
    """Raise InvalidConfig naming the first violated field; return None if fine."""
    if not 0.0 < cfg.tau < 1.0:
        raise InvalidConfig("tau", f"must lie in (0, 1), got {cfg.tau}")
    if not isinstance(cfg.similarity, SimilarityMeasure):
        raise InvalidConfig("similarity", f"unknown measure {cfg.similarity!r}")
    for name, (lo, hi) in (
        ("doc_question_range", cfg.doc_question_range),
        ("summary_question_range", cfg.summary_question_range),
    ):
        if lo < 1:
            raise InvalidConfig(name, f"minimum must be >= 1, got {lo}")
        if lo > hi:
            raise InvalidConfig(name, f"min > max: [{lo}, {hi}]")
    if cfg.top_k is not None:
        if cfg.top_k < 1:
            raise InvalidConfig("top_k", f"must be >= 1, got {cfg.top_k}")
        if cfg.top_k > cfg.doc_question_range[1]:
            raise InvalidConfig(
                "top_k",
                f"{cfg.top_k} exceeds doc_question_range max {cfg.doc_question_range[1]}",
            )
    if cfg.temperature < 0:
        raise InvalidConfig("temperature", f"must be >= 0, got {cfg.temperature}")
    if cfg.random_seed < 0:
        raise InvalidConfig("random_seed", f"must be >= 0, got {cfg.random_seed}")


def validate_refine_config(cfg: RefineConfig) -> None:
    """Raise InvalidConfig on threshold or budget violations."""
    if not 0.0 <= cfg.t_cov <= 1.0:
        raise InvalidConfig("t_cov", f"must lie in [0, 1], got {cfg.t_cov}")
    if not 0.0 <= cfg.t_cons <= 1.0:
        raise InvalidConfig("t_cons", f"must lie in [0, 1], got {cfg.t_cons}")
    if cfg.max_iters < 0:
        raise InvalidConfig("max_iters", f"must be >= 0, got {cfg.max_iters}")
