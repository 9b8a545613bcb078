"""End-to-end batch workflow through the CLI: stats, eval, metaeval.

A corpus is one JSON record per line with doc_id, document, system_id,
summary, and optionally a human score map. The eval subcommand writes
results.jsonl plus a manifest; metaeval joins those results back against
the human scores and prints a correlation table with significance stars.

The LLM side is a pre-seeded replay cache, so this runs offline and is
byte-reproducible (run it twice and diff the results files).
"""

import tempfile
from pathlib import Path

from sumeval import (
    CompletionCache,
    CorpusRecord,
    DocumentText,
    EvalConfig,
    LlmGateway,
    ReplayBackend,
    save_corpus,
)
from sumeval.cli import cli_dispatch
from sumeval.evaluator import (
    build_coverage_answer_prompt,
    build_consistency_answer_prompt,
    build_question_generation_prompt,
)
from sumeval.model import QuestionSet, RankedQuestion, TextSource


def seed_cache(cache, records_plan, cfg):
    gateway = LlmGateway(ReplayBackend(cache))

    def script(prompt, completion):
        cache.store_request(
            gateway.request_for(prompt, temperature=cfg.temperature), completion
        )

    for plan in records_plan:
        doc_text, summary_text, questions, answers, claim, truth = plan
        script(
            build_question_generation_prompt(doc_text, *cfg.doc_question_range),
            "\n".join(
                f"Question [{i + 1}]: {q}\nAnswer: x"
                for i, q in enumerate(questions)
            ),
        )
        qset = QuestionSet(
            origin=TextSource.DOCUMENT,
            questions=tuple(RankedQuestion(i + 1, q) for i, q in enumerate(questions)),
        )
        script(
            build_coverage_answer_prompt(summary_text, qset),
            "\n".join(
                f"Question: {q}\nAnswer: {a if a else 'UNANSWERABLE'}"
                for q, a in zip(questions, answers)
            ),
        )
        script(
            build_question_generation_prompt(summary_text, *cfg.summary_question_range),
            f"Question [1]: What is the key claim?\nAnswer: {claim}",
        )
        sset = QuestionSet(
            origin=TextSource.SUMMARY,
            questions=(RankedQuestion(1, "What is the key claim?"),),
        )
        script(
            build_consistency_answer_prompt(doc_text, sset),
            f"Question: What is the key claim?\nAnswer: {truth}",
        )


def main():
    workdir = Path(tempfile.mkdtemp(prefix="sumeval-demo05-"))
    cache = CompletionCache(workdir / "cache")
    cfg = EvalConfig(doc_question_range=(3, 3), summary_question_range=(1, 2))

    corpus = []
    plans = []
    for i, (answered, faithful) in enumerate([(3, True), (2, True), (1, False), (0, False)]):
        doc_text = (
            f"Report {i} studies region {i}. It counts {10 + i} stations, "
            f"spans {100 + i} km, and employs {20 + i} rangers."
        )
        summary_text = f"Report {i} summary variant with {answered} facts included."
        questions = [
            f"How many stations in report {i}?",
            f"How many km in report {i}?",
            f"How many rangers in report {i}?",
        ]
        answers = [
            f"{10 + i} stations" if answered >= 1 else None,
            f"{100 + i} km" if answered >= 2 else None,
            f"{20 + i} rangers" if answered >= 3 else None,
        ]
        claim = f"{10 + i} stations"
        truth = claim if faithful else "a contradicting count"
        plans.append((doc_text, summary_text, questions, answers, claim, truth))
        corpus.append(
            CorpusRecord(
                doc_id=f"report{i}",
                document=doc_text,
                system_id="modelX",
                summary=summary_text,
                human={
                    "coverage": float(answered),
                    "accuracy": 5.0 if faithful else 1.0,
                },
            )
        )

    seed_cache(cache, plans, cfg)
    corpus_path = workdir / "corpus.jsonl"
    save_corpus(corpus, corpus_path)
    out = workdir / "out"

    print("=== sumeval stats ===")
    cli_dispatch(["stats", str(corpus_path)])

    print()
    print("=== sumeval eval (strict replay) ===")
    cli_dispatch(
        [
            "eval",
            str(corpus_path),
            "--strict-replay",
            "--replay-dir",
            str(cache.directory),
            "--doc-questions",
            "3:3",
            "--sum-questions",
            "1:2",
            "--out",
            str(out),
        ]
    )

    print()
    print("=== sumeval metaeval ===")
    cli_dispatch(
        [
            "metaeval",
            str(out / "results.jsonl"),
            "--corpus",
            str(corpus_path),
            "--iterations",
            "2000",
            "--granularity",
            "summary",
            "--out",
            str(out),
        ]
    )

    print()
    print(f"artifacts under {workdir}")


if __name__ == "__main__":
    main()
