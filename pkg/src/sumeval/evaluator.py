"""Coverage and consistency scoring with structured feedback.

Coverage asks: can the summary answer the key questions generated from the
document? The score is the answered fraction, and the unanswered questions
become the coverage feedback.

Consistency asks: do the summary's own question/answer facts survive
verification against the document? Each summary answer is compared to the
document's answer for the same question; similarities at or below the
threshold contribute zero and the failing facts become the consistency
feedback. A fact whose question the document cannot answer at all scores
zero similarity (an unverifiable claim counts as inconsistent).

Both dimensions run through the gateway, so under a replay backend every
result here is bit-deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .errors import EmptyQuestionSet, NoParsableQA
from .gateway import LlmGateway, parse_answer_list, parse_qa_block
from .model import (
    AnswerRecord,
    AnswerSet,
    ConsistencyTriplet,
    Diagnostics,
    DocumentText,
    EvalConfig,
    EvaluationReport,
    QuestionSet,
    RankedQuestion,
    SimilarityMeasure,
    SummaryText,
    TextSource,
    validate_config,
)
from .prompts import TemplateId, render_prompt
from .textsim import answer_similarity, gated_contribution

logger = logging.getLogger(__name__)


def coverage_score_from_counts(answerable: int, total: int) -> float:
    """Answered fraction: answerable / total."""
    if total < 1:
        raise ValueError("total question count must be >= 1")
    if not 0 <= answerable <= total:
        raise ValueError("answerable count must lie in [0, total]")
    return answerable / total


def consistency_score_from_similarities(similarities, tau: float) -> float:
    """Mean of the similarities that strictly clear tau (others count as 0)."""
    sims = list(similarities)
    if not sims:
        raise ValueError("at least one fact similarity is required")
    return sum(gated_contribution(s, tau) for s in sims) / len(sims)


@dataclass(frozen=True)
class CoverageResult:
    score: float
    answered: tuple[tuple[RankedQuestion, str], ...]
    unanswered: tuple[RankedQuestion, ...]

    def __post_init__(self):
        object.__setattr__(self, "answered", tuple(self.answered))
        object.__setattr__(self, "unanswered", tuple(self.unanswered))


@dataclass(frozen=True)
class ConsistencyFact:
    """One verified fact: the summary's answer, the document's answer, and
    whether the similarity cleared the gate."""

    question: RankedQuestion
    summary_answer: str
    document_answer: str | None
    similarity: float
    passed: bool


@dataclass(frozen=True)
class ConsistencyResult:
    score: float
    facts: tuple[ConsistencyFact, ...]
    triplets: tuple[ConsistencyTriplet, ...]

    def __post_init__(self):
        object.__setattr__(self, "facts", tuple(self.facts))
        object.__setattr__(self, "triplets", tuple(self.triplets))


def format_question_list(questions) -> str:
    """Numbered question list for the answer-extraction prompt slot."""
    return "\n".join(f"{q.rank}. {q.question}" for q in questions)


def build_question_generation_prompt(text: str, lo: int, hi: int) -> str:
    return render_prompt(
        TemplateId.QA_GENERATION, {"text": text, "n_range": f"{lo}-{hi}"}
    )


def build_coverage_answer_prompt(summary_text: str, questions: QuestionSet) -> str:
    return render_prompt(
        TemplateId.COVERAGE_ANSWER_EXTRACTION,
        {"summary": summary_text, "questions": format_question_list(questions.questions)},
    )


def build_consistency_answer_prompt(document_text: str, questions: QuestionSet) -> str:
    return render_prompt(
        TemplateId.CONSISTENCY_ANSWER_EXTRACTION,
        {
            "document": document_text,
            "questions": format_question_list(questions.questions),
        },
    )


def _renumber(questions: list[RankedQuestion]) -> list[RankedQuestion]:
    return [replace(q, rank=i + 1) for i, q in enumerate(questions)]


def generate_document_questions(
    doc: DocumentText, cfg: EvalConfig, gateway: LlmGateway
) -> QuestionSet:
    """Generate the key-question set for a document.

    The generated answers are parsed but discarded; only the questions feed
    coverage scoring. More questions than the configured maximum are cut to
    the top-ranked maximum; fewer than the minimum are accepted as-is.
    """
    validate_config(cfg)
    lo, hi = cfg.doc_question_range
    prompt = build_question_generation_prompt(doc.text, lo, hi)
    raw = gateway.complete(prompt, temperature=cfg.temperature)
    try:
        pairs = parse_qa_block(raw)
    except NoParsableQA as exc:
        raise EmptyQuestionSet(f"no questions generated for document {doc.id}") from exc
    questions = [q for q, _ in pairs][:hi]
    if len(questions) < lo:
        logger.info(
            "document %s: %d questions generated, below requested minimum %d",
            doc.id,
            len(questions),
            lo,
        )
    return QuestionSet(origin=TextSource.DOCUMENT, questions=tuple(questions))


def coverage_evaluate(
    doc: DocumentText, summary: SummaryText, cfg: EvalConfig, gateway: LlmGateway
) -> CoverageResult:
    """Score how many document questions the summary can answer."""
    validate_config(cfg)
    questions = generate_document_questions(doc, cfg, gateway)
    prompt = build_coverage_answer_prompt(summary.text, questions)
    raw = gateway.complete(prompt, temperature=cfg.temperature)
    answers = parse_answer_list(raw, questions)
    answered = tuple(
        (r.question, r.answer) for r in answers.records if r.is_answered
    )
    unanswered = tuple(r.question for r in answers.records if not r.is_answered)
    score = coverage_score_from_counts(len(answered), len(questions))
    return CoverageResult(score=score, answered=answered, unanswered=unanswered)


def generate_summary_qa(
    summary: SummaryText, cfg: EvalConfig, gateway: LlmGateway
) -> tuple[QuestionSet, AnswerSet]:
    """Extract the summary's factual claims as question/answer pairs.

    Pairs whose generated answer is empty carry no verifiable fact; they are
    dropped and logged. Survivors are cut to the configured maximum and
    renumbered so ranks stay contiguous.
    """
    validate_config(cfg)
    lo, hi = cfg.summary_question_range
    prompt = build_question_generation_prompt(summary.text, lo, hi)
    raw = gateway.complete(prompt, temperature=cfg.temperature)
    try:
        pairs = parse_qa_block(raw)
    except NoParsableQA as exc:
        raise EmptyQuestionSet(
            f"no QA pairs generated for summary {summary.id}"
        ) from exc
    kept = [(q, a) for q, a in pairs if a.strip()]
    for q, _ in (p for p in pairs if not p[1].strip()):
        logger.info("summary %s: dropped pair with empty answer: %r", summary.id, q.question)
    kept = kept[:hi]
    if not kept:
        raise EmptyQuestionSet(f"no usable QA pairs generated for summary {summary.id}")
    if len(kept) < lo:
        logger.info(
            "summary %s: %d QA pairs kept, below requested minimum %d",
            summary.id,
            len(kept),
            lo,
        )
    questions = _renumber([q for q, _ in kept])
    records = tuple(
        AnswerRecord(question=q, answer=a) for q, (_, a) in zip(questions, kept)
    )
    return (
        QuestionSet(origin=TextSource.SUMMARY, questions=tuple(questions)),
        AnswerSet(source=TextSource.SUMMARY, records=records),
    )


def consistency_evaluate(
    doc: DocumentText, summary: SummaryText, cfg: EvalConfig, gateway: LlmGateway
) -> ConsistencyResult:
    """Verify the summary's claims against document-extracted ground truth."""
    validate_config(cfg)
    questions, summary_answers = generate_summary_qa(summary, cfg, gateway)
    prompt = build_consistency_answer_prompt(doc.text, questions)
    raw = gateway.complete(prompt, temperature=cfg.temperature)
    doc_answers = parse_answer_list(raw, questions)

    embedder = gateway.embed if cfg.similarity is SimilarityMeasure.COSINE else None
    facts = []
    for s_rec, d_rec in zip(summary_answers.records, doc_answers.records):
        if d_rec.answer is None:
            similarity = 0.0
        else:
            similarity = answer_similarity(
                s_rec.answer, d_rec.answer, cfg.similarity, embedder=embedder
            )
        facts.append(
            ConsistencyFact(
                question=s_rec.question,
                summary_answer=s_rec.answer,
                document_answer=d_rec.answer,
                similarity=similarity,
                passed=similarity > cfg.tau,
            )
        )
    return ConsistencyResult(
        score=consistency_score_from_similarities((f.similarity for f in facts), cfg.tau),
        facts=tuple(facts),
        triplets=_triplets_from_facts(facts),
    )


def _triplets_from_facts(facts) -> tuple[ConsistencyTriplet, ...]:
    return tuple(
        ConsistencyTriplet(
            question=f.question.question,
            summary_answer=f.summary_answer,
            document_answer=f.document_answer,
            similarity=f.similarity,
        )
        for f in facts
        if not f.passed
    )


def topk_filter(result, k: int):
    """Restrict a result to the k most important questions and rescore.

    A k at or above the question count returns the input unchanged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(result, CoverageResult):
        total = len(result.answered) + len(result.unanswered)
        if k >= total:
            return result
        answered = tuple(p for p in result.answered if p[0].rank <= k)
        unanswered = tuple(q for q in result.unanswered if q.rank <= k)
        return CoverageResult(
            score=coverage_score_from_counts(len(answered), len(answered) + len(unanswered)),
            answered=answered,
            unanswered=unanswered,
        )
    if isinstance(result, ConsistencyResult):
        if k >= len(result.facts):
            return result
        facts = [f for f in result.facts if f.question.rank <= k]
        # The stored pass flags already encode the gate, so no tau is needed.
        score = sum(f.similarity if f.passed else 0.0 for f in facts) / len(facts)
        return ConsistencyResult(
            score=score,
            facts=tuple(facts),
            triplets=_triplets_from_facts(facts),
        )
    raise TypeError(f"unsupported result type: {type(result).__name__}")


def evaluate(
    doc: DocumentText, summary: SummaryText, cfg: EvalConfig, gateway: LlmGateway
) -> EvaluationReport:
    """Run both dimensions and assemble the full report.

    Either dimension failing fails the whole call; no partial reports are
    produced. When cfg.top_k is set both results are filtered before the
    report is assembled, so the stored diagnostics always reproduce the
    stored scores.
    """
    validate_config(cfg)
    coverage = coverage_evaluate(doc, summary, cfg, gateway)
    consistency = consistency_evaluate(doc, summary, cfg, gateway)

    notes = []
    n_doc_q = len(coverage.answered) + len(coverage.unanswered)
    if n_doc_q < cfg.doc_question_range[0]:
        notes.append(
            f"document questions below requested minimum: {n_doc_q} < {cfg.doc_question_range[0]}"
        )
    if len(consistency.facts) < cfg.summary_question_range[0]:
        notes.append(
            f"summary facts below requested minimum: "
            f"{len(consistency.facts)} < {cfg.summary_question_range[0]}"
        )

    if cfg.top_k is not None:
        coverage = topk_filter(coverage, cfg.top_k)
        consistency = topk_filter(consistency, cfg.top_k)

    diagnostics = Diagnostics(
        doc_question_count=len(coverage.answered) + len(coverage.unanswered),
        answerable_count=len(coverage.answered),
        summary_question_count=len(consistency.facts),
        fact_similarities=tuple(f.similarity for f in consistency.facts),
        tau=cfg.tau,
        notes=tuple(notes),
    )
    return EvaluationReport(
        coverage_score=coverage.score,
        consistency_score=consistency.score,
        coverage_feedback=coverage.unanswered,
        consistency_feedback=consistency.triplets,
        diagnostics=diagnostics,
    )


def report_scores_consistent(report: EvaluationReport) -> bool:
    """True iff both stored scores are bit-identical to scores recomputed
    from the report's own diagnostics."""
    d = report.diagnostics
    cov = coverage_score_from_counts(d.answerable_count, d.doc_question_count)
    cons = consistency_score_from_similarities(d.fact_similarities, d.tau)
    return report.coverage_score == cov and report.consistency_score == cons
