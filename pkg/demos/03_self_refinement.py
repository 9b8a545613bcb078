"""Turn evaluation feedback into an iterative rewrite loop.

Each iteration evaluates the current summary; if the coverage score is below
its threshold the unanswered questions become explicit rewrite instructions
(coverage has priority when both dimensions fail), otherwise failing facts
are sent back with their correct answers. The loop stops when both scores
clear their thresholds or the iteration budget runs out.

Scripted replay again: the "LLM" here answers more questions after each
rewrite, so the coverage score climbs 0.25 -> 0.75 -> done.
"""

import tempfile

from sumeval import (
    CompletionCache,
    DocumentText,
    EvalConfig,
    LlmGateway,
    RefineConfig,
    ReplayBackend,
    SummaryText,
    refine_loop,
)
from sumeval.evaluator import (
    build_coverage_answer_prompt,
    build_consistency_answer_prompt,
    build_question_generation_prompt,
)
from sumeval.model import FeedbackKind, QuestionSet, RankedQuestion, TextSource
from sumeval.refiner import build_refine_prompt, construct_coverage_feedback

DOCUMENT = DocumentText(
    id="report-7",
    text=(
        "The coastal survey covered 120 kilometers of shoreline. Teams "
        "recorded erosion at 14 sites, tagged 3 new estuaries, replaced 9 "
        "tide gauges, and trained 25 local observers during the season."
    ),
)

INITIAL = SummaryText(
    id="report-7::v0",
    source_id="report-7",
    text="The coastal survey covered 120 kilometers of shoreline.",
)

CFG = EvalConfig(doc_question_range=(4, 4), summary_question_range=(1, 2))
RCFG = RefineConfig(t_cov=0.6, t_cons=0.73, max_iters=3)

QUESTIONS = [
    "How many kilometers of shoreline were covered?",
    "At how many sites was erosion recorded?",
    "How many tide gauges were replaced?",
    "How many local observers were trained?",
]

REVISED = (
    "The coastal survey covered 120 kilometers of shoreline, recorded "
    "erosion at 14 sites, and replaced 9 tide gauges."
)


def main():
    cache = CompletionCache(tempfile.mkdtemp(prefix="sumeval-demo03-"))
    gateway = LlmGateway(ReplayBackend(cache))

    def script(prompt, completion):
        cache.store_request(
            gateway.request_for(prompt, temperature=CFG.temperature), completion
        )

    def script_eval(summary_text, coverage_answers, claim):
        gen = "\n".join(
            f"Question [{i + 1}]: {q}\nAnswer: x" for i, q in enumerate(QUESTIONS)
        )
        script(build_question_generation_prompt(DOCUMENT.text, 4, 4), gen)
        qset = QuestionSet(
            origin=TextSource.DOCUMENT,
            questions=tuple(RankedQuestion(i + 1, q) for i, q in enumerate(QUESTIONS)),
        )
        cov = "\n".join(
            f"Question: {q}\nAnswer: {a if a else 'UNANSWERABLE'}"
            for q, a in zip(QUESTIONS, coverage_answers)
        )
        script(build_coverage_answer_prompt(summary_text, qset), cov)
        script(
            build_question_generation_prompt(summary_text, 1, 2),
            f"Question [1]: What did the survey cover?\nAnswer: {claim}",
        )
        sset = QuestionSet(
            origin=TextSource.SUMMARY,
            questions=(RankedQuestion(1, "What did the survey cover?"),),
        )
        script(
            build_consistency_answer_prompt(DOCUMENT.text, sset),
            f"Question: What did the survey cover?\nAnswer: {claim}",
        )

    # Iteration 0: only one of four questions is answerable.
    script_eval(INITIAL.text, ["120 kilometers", None, None, None], "120 kilometers")
    feedback = construct_coverage_feedback(
        [RankedQuestion(r, QUESTIONS[r - 1]) for r in (2, 3, 4)]
    )
    script(
        build_refine_prompt(FeedbackKind.COVERAGE, DOCUMENT.text, INITIAL.text, feedback.body),
        REVISED,
    )
    # Iteration 1: the revision answers three of four.
    script_eval(REVISED, ["120 kilometers", "14 sites", "9 tide gauges", None], "120 kilometers")

    trace = refine_loop(DOCUMENT, INITIAL, CFG, RCFG, gateway)

    for i, report in enumerate(trace.reports):
        print(
            f"iteration {i}: coverage {report.coverage_score:.2f}, "
            f"consistency {report.consistency_score:.2f}"
        )
        if i < len(trace.rendered_feedback):
            fb = trace.rendered_feedback[i]
            print(f"  -> {fb.kind.value} feedback sent to the rewriter:")
            for line in fb.body.splitlines():
                print(f"     {line}")
    print()
    print(f"termination: {trace.termination.value}")
    print(f"final summary (generation {trace.final_summary.generation}):")
    print(f"  {trace.final_summary.text}")


if __name__ == "__main__":
    main()
