"""Score one summary on coverage and factual consistency.

The toolkit drives an LLM through four steps: generate key questions from
the document, try to answer them from the summary (coverage), extract the
summary's own claims as question/answer pairs, and verify those claims
against the document (consistency).

This demo runs fully offline: the four completions an LLM would produce are
stored in a replay cache first, then the evaluator replays them. Swap the
ReplayBackend for HttpChatBackend(base_url=...) to run against a live
chat-completions endpoint.
"""

import tempfile

from sumeval import (
    CompletionCache,
    DocumentText,
    EvalConfig,
    LlmGateway,
    ReplayBackend,
    SummaryText,
    evaluate,
)
from sumeval.evaluator import (
    build_coverage_answer_prompt,
    build_question_generation_prompt,
)
from sumeval.evaluator import build_consistency_answer_prompt
from sumeval.model import QuestionSet, RankedQuestion, TextSource

DOCUMENT = DocumentText(
    id="patent-42",
    text=(
        "A modular antenna array for low-orbit relays. The array uses 16 "
        "phased elements, draws 40 watts in transmit mode, and folds into a "
        "0.5 meter stowage volume. A thermal shunt protects the feed network "
        "during eclipse transitions. The design was filed in 2021."
    ),
)

SUMMARY = SummaryText(
    id="patent-42::baseline",
    source_id="patent-42",
    text=(
        "A foldable antenna array for satellite relays with 16 phased "
        "elements. It draws 60 watts while transmitting."
    ),
)

CFG = EvalConfig(doc_question_range=(4, 6), summary_question_range=(2, 4))


def main():
    cache = CompletionCache(tempfile.mkdtemp(prefix="sumeval-demo01-"))
    gateway = LlmGateway(ReplayBackend(cache))

    def script(prompt, completion):
        cache.store_request(
            gateway.request_for(prompt, temperature=CFG.temperature), completion
        )

    # 1. Question generation over the document (answers are discarded).
    doc_questions = [
        "How many phased elements does the array use?",
        "How much power does the array draw in transmit mode?",
        "What protects the feed network during eclipse transitions?",
        "When was the design filed?",
    ]
    script(
        build_question_generation_prompt(DOCUMENT.text, *CFG.doc_question_range),
        "\n".join(
            f"Question [{i + 1}]: {q}\nAnswer: (from document)"
            for i, q in enumerate(doc_questions)
        ),
    )

    # 2. Coverage: answer those questions from the summary.
    qset = QuestionSet(
        origin=TextSource.DOCUMENT,
        questions=tuple(
            RankedQuestion(i + 1, q) for i, q in enumerate(doc_questions)
        ),
    )
    script(
        build_coverage_answer_prompt(SUMMARY.text, qset),
        "Question: How many phased elements does the array use?\n"
        "Answer: 16 phased elements\n"
        "Question: How much power does the array draw in transmit mode?\n"
        "Answer: 60 watts\n"
        "Question: What protects the feed network during eclipse transitions?\n"
        "Answer: UNANSWERABLE\n"
        "Question: When was the design filed?\n"
        "Answer: UNANSWERABLE",
    )

    # 3. The summary's own claims as QA pairs.
    script(
        build_question_generation_prompt(SUMMARY.text, *CFG.summary_question_range),
        "Question [1]: How many phased elements are there?\n"
        "Answer: 16 phased elements\n"
        "Question [2]: How much power does it draw while transmitting?\n"
        "Answer: 60 watts",
    )

    # 4. Consistency: ground-truth answers from the document.
    sset = QuestionSet(
        origin=TextSource.SUMMARY,
        questions=(
            RankedQuestion(1, "How many phased elements are there?"),
            RankedQuestion(2, "How much power does it draw while transmitting?"),
        ),
    )
    script(
        build_consistency_answer_prompt(DOCUMENT.text, sset),
        "Question: How many phased elements are there?\n"
        "Answer: 16 phased elements\n"
        "Question: How much power does it draw while transmitting?\n"
        "Answer: 40 watts",
    )

    report = evaluate(DOCUMENT, SUMMARY, CFG, gateway)

    print(f"coverage score:    {report.coverage_score:.3f}")
    print(f"consistency score: {report.consistency_score:.3f}")
    print()
    print("unanswered document questions (coverage feedback):")
    for q in report.coverage_feedback:
        print(f"  {q.rank}. {q.question}")
    print()
    print("failed facts (consistency feedback):")
    for t in report.consistency_feedback:
        doc_ans = t.document_answer if t.document_answer is not None else "(not in document)"
        print(f"  Q: {t.question}")
        print(f"     summary said: {t.summary_answer!r}")
        print(f"     document says: {doc_ans!r}  (similarity {t.similarity:.2f})")
    print()
    d = report.diagnostics
    print(
        f"diagnostics: {d.answerable_count}/{d.doc_question_count} questions "
        f"answerable, {d.summary_question_count} facts checked, tau={d.tau}"
    )


if __name__ == "__main__":
    main()
