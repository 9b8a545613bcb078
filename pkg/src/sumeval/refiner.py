"""Iterative self-refinement driven by evaluation feedback.

Each loop iteration evaluates the current summary, stops if both scores
clear their thresholds, and otherwise rewrites the summary against exactly
one deficiency list: coverage first when both dimensions fail, consistency
otherwise. The loop performs at most ``max_iters`` refinements, and a summary
produced by the final refinement is returned unevaluated (the trace records
that).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyFeedback, EmptyRevision, RefinementError, SumevalError
from .evaluator import evaluate
from .gateway import LlmGateway
from .model import (
    ConsistencyTriplet,
    DocumentText,
    EvalConfig,
    FeedbackKind,
    FeedbackText,
    RankedQuestion,
    RefineConfig,
    RefinementTrace,
    SummaryText,
    Termination,
    validate_config,
    validate_refine_config,
)
from .prompts import TemplateId, render_prompt

_REMOVAL_NOTE = (
    "The source document does not answer this question. "
    "Remove this unsupported claim from the summary."
)


def construct_coverage_feedback(f_cov) -> FeedbackText:
    """Render unanswered questions as a numbered list in rank order."""
    questions: list[RankedQuestion] = sorted(f_cov, key=lambda q: q.rank)
    if not questions:
        raise EmptyFeedback("no unanswered questions to render")
    body = "\n".join(f"{i + 1}. {q.question}" for i, q in enumerate(questions))
    return FeedbackText(kind=FeedbackKind.COVERAGE, body=body)


def construct_consistency_feedback(f_cons) -> FeedbackText:
    """Render failing facts as question / correct-answer pairs.

    Facts the document could not answer at all get an explicit removal
    instruction instead of a correct answer.
    """
    triplets: list[ConsistencyTriplet] = list(f_cons)
    if not triplets:
        raise EmptyFeedback("no inconsistent facts to render")
    blocks = []
    for t in triplets:
        correct = t.document_answer if t.document_answer is not None else _REMOVAL_NOTE
        blocks.append(f"Question: {t.question}\nCorrect Answer: {correct}")
    return FeedbackText(kind=FeedbackKind.CONSISTENCY, body="\n\n".join(blocks))


def build_refine_prompt(
    kind: FeedbackKind, document_text: str, summary_text: str, feedback_body: str
) -> str:
    template = (
        TemplateId.COVERAGE_REFINE
        if kind is FeedbackKind.COVERAGE
        else TemplateId.CONSISTENCY_REFINE
    )
    return render_prompt(
        template,
        {"document": document_text, "summary": summary_text, "feedback": feedback_body},
    )


def _revision_id(summary: SummaryText, generation: int) -> str:
    base = summary.id.split("@", 1)[0]
    return f"{base}@{generation}"


def refine_step(
    doc: DocumentText,
    summary: SummaryText,
    feedback: FeedbackText,
    gateway: LlmGateway,
) -> SummaryText:
    """One rewrite of the summary against one feedback text."""
    if not feedback.body.strip():
        raise EmptyFeedback("feedback body is empty")
    prompt = build_refine_prompt(feedback.kind, doc.text, summary.text, feedback.body)
    revised = gateway.complete(prompt).strip()
    if not revised:
        raise EmptyRevision(f"blank revision for summary {summary.id}")
    generation = summary.generation + 1
    return SummaryText(
        id=_revision_id(summary, generation),
        source_id=summary.source_id,
        text=revised,
        generation=generation,
    )


def initial_summarize(doc: DocumentText, gateway: LlmGateway) -> SummaryText:
    """Produce a plain initial summary when the corpus does not supply one."""
    text = gateway.complete(f"Summarize the following document.\n\n{doc.text}").strip()
    if not text:
        raise EmptyRevision(f"blank initial summary for document {doc.id}")
    return SummaryText(id=f"{doc.id}@0", source_id=doc.id, text=text, generation=0)


@dataclass(frozen=True)
class PartialTrace:
    """What a failed loop had produced before the error."""

    summaries: tuple[SummaryText, ...]
    reports: tuple
    rendered_feedback: tuple[FeedbackText, ...]


def refine_loop(
    doc: DocumentText,
    initial: SummaryText,
    ecfg: EvalConfig,
    rcfg: RefineConfig,
    gateway: LlmGateway,
) -> RefinementTrace:
    """Evaluate-and-rewrite until thresholds are met or the budget runs out.

    Returns the full trace. On failure partway through, the error is wrapped
    in RefinementError carrying a PartialTrace of everything completed.
    """
    validate_config(ecfg)
    validate_refine_config(rcfg)
    summaries = [initial]
    reports = []
    feedbacks: list[FeedbackText] = []
    try:
        for i in range(rcfg.max_iters):
            report = evaluate(doc, summaries[i], ecfg, gateway)
            reports.append(report)
            if (
                report.coverage_score >= rcfg.t_cov
                and report.consistency_score >= rcfg.t_cons
            ):
                return RefinementTrace(
                    summaries=tuple(summaries),
                    reports=tuple(reports),
                    rendered_feedback=tuple(feedbacks),
                    termination=Termination.THRESHOLDS_MET,
                )
            if report.coverage_score < rcfg.t_cov:
                feedback = construct_coverage_feedback(report.coverage_feedback)
            else:
                feedback = construct_consistency_feedback(report.consistency_feedback)
            feedbacks.append(feedback)
            summaries.append(refine_step(doc, summaries[i], feedback, gateway))
    except SumevalError as exc:
        raise RefinementError(
            f"refinement failed at iteration {len(summaries) - 1}: {exc}",
            PartialTrace(tuple(summaries), tuple(reports), tuple(feedbacks)),
        ) from exc
    return RefinementTrace(
        summaries=tuple(summaries),
        reports=tuple(reports),
        rendered_feedback=tuple(feedbacks),
        termination=Termination.MAX_ITERS_REACHED,
    )
