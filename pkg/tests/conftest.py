"""Shared helpers for scripting deterministic replay-backed pipelines.

Tests never talk to a live backend: they pre-store the exact completions the
pipeline will request into a CompletionCache and run everything through the
strict ReplayBackend. The helpers here render the same prompts the evaluator
and refiner will render, so a scripted response lands under the right digest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import pytest

from sumeval.evaluator import (
    build_consistency_answer_prompt,
    build_coverage_answer_prompt,
    build_question_generation_prompt,
)
from sumeval.gateway import (
    CompletionCache,
    CompletionRequest,
    LlmGateway,
    ReplayBackend,
    format_qa_block,
)
from sumeval.model import (
    DocumentText,
    EvalConfig,
    QuestionSet,
    RankedQuestion,
    SummaryText,
    TextSource,
)
from sumeval.prompts import UNANSWERABLE
from sumeval.refiner import build_refine_prompt


@pytest.fixture
def cache(tmp_path) -> CompletionCache:
    return CompletionCache(tmp_path / "cache")


def replay_gateway(cache: CompletionCache, *, model: str = "default") -> LlmGateway:
    return LlmGateway(ReplayBackend(cache), model=model)


def store_completion(
    cache: CompletionCache,
    prompt: str,
    text: str,
    *,
    model: str = "default",
    temperature: float = 1e-10,
) -> None:
    request = CompletionRequest(prompt=prompt, temperature=temperature, model=model)
    cache.store_request(request, text)


def qa_block(pairs) -> str:
    """Render (question, answer) pairs in the ranked generation format."""
    return format_qa_block(
        [(RankedQuestion(rank=i + 1, question=q), a) for i, (q, a) in enumerate(pairs)]
    )


def answers_block(questions, answers) -> str:
    """Render the unranked extraction format; None becomes UNANSWERABLE."""
    lines = []
    for q, a in zip(questions, answers):
        lines.append(f"Question: {q}")
        lines.append(f"Answer: {a if a is not None else UNANSWERABLE}")
    return "\n".join(lines)


@dataclass
class EvalScript:
    """One summary's scripted evaluation outcome.

    coverage_answers aligns with doc_questions after truncation to the
    configured maximum; None means the summary cannot answer. doc_answers
    aligns with the summary QA pairs that survive the empty-answer drop and
    truncation; None means the document cannot answer.
    """

    doc_questions: list[str]
    coverage_answers: list
    summary_qa: list[tuple[str, str]] = field(default_factory=list)
    doc_answers: list = field(default_factory=list)


def kept_summary_questions(script: EvalScript, cfg: EvalConfig) -> QuestionSet:
    kept = [(q, a) for q, a in script.summary_qa if a.strip()]
    kept = kept[: cfg.summary_question_range[1]]
    return QuestionSet(
        origin=TextSource.SUMMARY,
        questions=tuple(
            RankedQuestion(rank=i + 1, question=q) for i, (q, _) in enumerate(kept)
        ),
    )


def truncated_doc_questions(script: EvalScript, cfg: EvalConfig) -> QuestionSet:
    kept = script.doc_questions[: cfg.doc_question_range[1]]
    return QuestionSet(
        origin=TextSource.DOCUMENT,
        questions=tuple(
            RankedQuestion(rank=i + 1, question=q) for i, q in enumerate(kept)
        ),
    )


def script_evaluation(
    cache: CompletionCache,
    doc: DocumentText,
    summary: SummaryText,
    cfg: EvalConfig,
    script: EvalScript,
    *,
    model: str = "default",
) -> None:
    """Store the four completions one evaluate() call will request."""
    t = cfg.temperature
    lo, hi = cfg.doc_question_range
    store_completion(
        cache,
        build_question_generation_prompt(doc.text, lo, hi),
        qa_block([(q, f"seed answer {i + 1}") for i, q in enumerate(script.doc_questions)]),
        model=model,
        temperature=t,
    )
    doc_qs = truncated_doc_questions(script, cfg)
    store_completion(
        cache,
        build_coverage_answer_prompt(summary.text, doc_qs),
        answers_block([q.question for q in doc_qs.questions], script.coverage_answers),
        model=model,
        temperature=t,
    )
    if script.summary_qa:
        slo, shi = cfg.summary_question_range
        store_completion(
            cache,
            build_question_generation_prompt(summary.text, slo, shi),
            qa_block(script.summary_qa),
            model=model,
            temperature=t,
        )
        sum_qs = kept_summary_questions(script, cfg)
        store_completion(
            cache,
            build_consistency_answer_prompt(doc.text, sum_qs),
            answers_block([q.question for q in sum_qs.questions], script.doc_answers),
            model=model,
            temperature=t,
        )


def script_refinement(
    cache: CompletionCache,
    doc: DocumentText,
    summary: SummaryText,
    kind,
    feedback_body: str,
    revised_text: str,
    *,
    model: str = "default",
    temperature: float = 1e-10,
) -> None:
    """Store the completion one refine_step() call will request."""
    prompt = build_refine_prompt(kind, doc.text, summary.text, feedback_body)
    store_completion(cache, prompt, revised_text, model=model, temperature=temperature)


def build_scripted_corpus(
    directory,
    cache: CompletionCache,
    *,
    n_docs: int = 5,
    systems=("alpha", "beta"),
    cfg: EvalConfig | None = None,
):
    """Write a corpus file whose CLI evaluation is fully replay-scripted.

    Coverage varies with (doc, system) so human scores have real spread;
    consistency alternates between perfect and broken records. Returns the
    corpus path and the records.
    """
    from sumeval.harness import CorpusRecord, save_corpus

    cfg = cfg if cfg is not None else EvalConfig()
    records = []
    for i in range(n_docs):
        doc_id = f"doc{i:02d}"
        doc_text = (
            f"Document {doc_id} describes topic {i}. It lists facts one two "
            f"three four in order. The mission number is {100 + i}."
        )
        doc = DocumentText(id=doc_id, text=doc_text)
        doc_questions = [f"what is fact {k} of {doc_id}?" for k in range(1, 5)]
        for j, system in enumerate(systems):
            summary_text = (
                f"Summary by {system} of {doc_id} mentioning mission {100 + i} "
                f"and detail level {(i + j) % 5}."
            )
            n_answered = (i + j) % 5
            coverage_answers = [
                f"fact {k}" if k <= n_answered else None for k in range(1, 5)
            ]
            consistent = (i + j) % 2 == 0
            # Question texts embed the system so the two summaries of one
            # document never share a consistency ground-truth prompt.
            summary_qa = [
                (f"what mission number does {system} cite for {doc_id}?", f"mission {100 + i}"),
                (f"what topic does {system} cite for {doc_id}?", f"topic {i}"),
            ]
            doc_answers = (
                [f"mission {100 + i}", f"topic {i}"]
                if consistent
                else ["entirely unrelated words", None]
            )
            script_evaluation(
                cache,
                doc,
                SummaryText(id=f"{doc_id}::{system}", source_id=doc_id, text=summary_text),
                cfg,
                EvalScript(doc_questions, coverage_answers, summary_qa, doc_answers),
            )
            records.append(
                CorpusRecord(
                    doc_id=doc_id,
                    document=doc_text,
                    system_id=system,
                    summary=summary_text,
                    human={
                        "coverage": float(n_answered),
                        "accuracy": 5.0 if consistent else 1.0,
                    },
                )
            )
    path = directory / "corpus.jsonl"
    save_corpus(records, path)
    return path, records
