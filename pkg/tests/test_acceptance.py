"""Acceptance criteria, one test per criterion.

Each test prints a `[criterion NN] PASS/FAIL` line (visible with -s) and
enforces its runtime budget. Run with:

    pytest tests/test_acceptance.py -v -s
"""

import contextlib
import math
import random
import time

import pytest

import sumeval.metaeval as metaeval_module
from conftest import (
    EvalScript,
    build_scripted_corpus,
    replay_gateway,
    script_evaluation,
    script_refinement,
)
from parser_cases import ANSWER_LIST_CASES, QA_BLOCK_CASES, ZERO_PAIR_CASES
from sumeval.cli import cli_dispatch
from sumeval.errors import NoParsableQA
from sumeval.evaluator import (
    consistency_score_from_similarities,
    coverage_score_from_counts,
    report_scores_consistent,
)
from sumeval.gateway import LlmGateway, ReplayBackend, parse_answer_list, parse_qa_block
from sumeval.harness import load_results
from sumeval.metaeval import (
    AgreementLevel,
    AnnotationTable,
    kendall_tau_b,
    krippendorff_alpha,
    permutation_pvalue,
)
from sumeval.model import (
    DocumentText,
    EvalConfig,
    FeedbackKind,
    QuestionSet,
    RankedQuestion,
    RefineConfig,
    SummaryText,
    Termination,
    TextSource,
)
from sumeval.refiner import construct_coverage_feedback, refine_loop
from test_metaeval import alpha_oracle, tau_b_oracle
from test_textsim import rouge1_f1_oracle
from sumeval.textsim import rouge1_f1


@contextlib.contextmanager
def criterion(number: int, description: str, budget_seconds: float):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"[criterion {number:02d}] FAIL: {description}")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_seconds, (
        f"criterion {number} took {elapsed:.2f}s, budget {budget_seconds}s"
    )
    print(
        f"[criterion {number:02d}] PASS in {elapsed:.2f}s "
        f"(budget {budget_seconds:g}s): {description}"
    )


def test_c01_coverage_formula_exact():
    with criterion(1, "coverage score equals a/q exactly for all a <= q <= 12", 1.0):
        for q in range(1, 13):
            for a in range(0, q + 1):
                assert abs(coverage_score_from_counts(a, q) - a / q) <= 1e-12


def test_c02_consistency_formula_exact():
    def oracle(sims, tau):
        kept = 0.0
        for s in sims:
            if s > tau:
                kept += s
        return kept / len(sims)

    with criterion(
        2, "consistency score equals gated mean over random vectors and taus", 1.0
    ):
        rng = random.Random(1002)
        taus = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
        for _ in range(1000):
            n = rng.randint(1, 10)
            sims = [rng.random() for _ in range(n)]
            tau = rng.choice(taus)
            if rng.random() < 0.5:
                sims[rng.randrange(n)] = tau  # exact boundary must gate to zero
            got = consistency_score_from_similarities(sims, tau)
            assert abs(got - oracle(sims, tau)) <= 1e-12
        for tau in taus:
            assert consistency_score_from_similarities([tau], tau) == 0.0


def test_c03_rouge_matches_bruteforce_oracle():
    with criterion(3, "ROUGE-1 F1 equals clipped-count oracle on 1000 pairs", 5.0):
        rng = random.Random(1003)
        vocab = list("abcdefgh")
        for _ in range(1000):
            cand = rng.choices(vocab, k=rng.randint(0, 10))
            ref = rng.choices(vocab, k=rng.randint(0, 10))
            assert rouge1_f1(" ".join(cand), " ".join(ref)) == rouge1_f1_oracle(
                cand, ref
            )


def test_c04_kendall_matches_pair_count_oracle():
    with criterion(4, "tau_b equals O(n^2) oracle on 1000 tied vectors", 10.0):
        assert kendall_tau_b([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
        assert kendall_tau_b([1, 2, 3, 4], [9, 7, 5, 3]) == -1.0
        rng = random.Random(1004)
        produced = 0
        while produced < 1000:
            n = rng.randint(2, 30)
            x = [rng.randint(0, 6) for _ in range(n)]
            y = [rng.randint(0, 6) for _ in range(n)]
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            assert abs(kendall_tau_b(x, y) - tau_b_oracle(x, y)) <= 1e-12
            produced += 1


def test_c05_permutation_test(monkeypatch):
    with criterion(
        5, "exhaustive p exact on n=3; Monte-Carlo within 3 sigma on 50 inputs", 30.0
    ):
        assert permutation_pvalue([1, 2, 3], [1, 2, 3]) == 1 / 3

        rng = random.Random(1005)
        cases = []
        while len(cases) < 50:
            n = rng.randint(3, 6)
            x = [rng.randint(0, 3) for _ in range(n)]
            y = [rng.randint(0, 3) for _ in range(n)]
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            cases.append((x, y))

        iterations = 10000
        for x, y in cases:
            p_exact = permutation_pvalue(x, y)
            monkeypatch.setattr(metaeval_module, "EXHAUSTIVE_MAX_N", 0)
            p_mc = permutation_pvalue(x, y, iterations=iterations, seed=1005)
            monkeypatch.setattr(metaeval_module, "EXHAUSTIVE_MAX_N", 7)
            count = p_mc * (iterations + 1) - 1
            sigma = math.sqrt(iterations * p_exact * (1 - p_exact))
            assert abs(count - iterations * p_exact) <= 3 * sigma + 1e-6, (x, y)


def test_c06_krippendorff_alpha():
    with criterion(
        6, "alpha is 1.0 on unanimity and matches the pairwise oracle", 5.0
    ):
        units = [f"u{i}" for i in range(4)]
        raters = ["r1", "r2", "r3"]
        unanimous = AnnotationTable(
            units=tuple(units),
            raters=tuple(raters),
            values={(u, r): i % 3 for i, u in enumerate(units) for r in raters},
        )
        for level in (AgreementLevel.NOMINAL, AgreementLevel.ORDINAL):
            assert krippendorff_alpha(unanimous, level) == 1.0

        rng = random.Random(1006)
        for level in (AgreementLevel.NOMINAL, AgreementLevel.ORDINAL):
            produced = 0
            while produced < 20:
                rows = [
                    [
                        rng.randint(1, 5) if rng.random() < 0.75 else None
                        for _ in range(rng.randint(2, 4))
                    ]
                    for _ in range(rng.randint(2, 6))
                ]
                unit_values = [[v for v in row if v is not None] for row in rows]
                if not any(len(vals) >= 2 for vals in unit_values):
                    continue
                table = AnnotationTable(
                    units=tuple(f"u{i}" for i in range(len(rows))),
                    raters=tuple(f"r{j}" for j in range(4)),
                    values={
                        (f"u{i}", f"r{j}"): v
                        for i, row in enumerate(rows)
                        for j, v in enumerate(row)
                        if v is not None
                    },
                )
                got = krippendorff_alpha(table, level)
                assert abs(got - alpha_oracle(unit_values, level)) <= 1e-9
                produced += 1


def test_c07_end_to_end_determinism(tmp_path, cache):
    with criterion(
        7, "CLI eval over 10 replay records is byte-identical and self-verifying", 10.0
    ):
        corpus, records = build_scripted_corpus(tmp_path, cache)
        assert len(records) == 10
        args = lambda out: [
            "eval",
            str(corpus),
            "--strict-replay",
            "--replay-dir",
            str(cache.directory),
            "--seed",
            "7",
            "--out",
            str(out),
        ]
        assert cli_dispatch(args(tmp_path / "run1")) == 0
        assert cli_dispatch(args(tmp_path / "run2")) == 0
        first = (tmp_path / "run1" / "results.jsonl").read_bytes()
        second = (tmp_path / "run2" / "results.jsonl").read_bytes()
        assert first == second
        results = load_results(tmp_path / "run1" / "results.jsonl")
        assert len(results) == 10
        assert all(report_scores_consistent(r.report) for r in results)


DOC = DocumentText(
    id="doc-a2",
    text=(
        "The relay station opened in 1987 near the coast. It handles four "
        "antenna arrays, reports to the northern office, and runs on solar power."
    ),
)
S0 = SummaryText(
    id="doc-a2::sys", source_id="doc-a2", text="A relay station handles antennas."
)
CFG = EvalConfig(doc_question_range=(1, 8), summary_question_range=(1, 6))


class _CountingBackend:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0
        self.backend_id = inner.backend_id

    def complete(self, request):
        self.calls += 1
        return self.inner.complete(request)


def _perfect_script(n_questions=2):
    return EvalScript(
        doc_questions=[f"q{i}?" for i in range(1, n_questions + 1)],
        coverage_answers=[f"a{i}" for i in range(1, n_questions + 1)],
        summary_qa=[("claim?", "stable value")],
        doc_answers=["stable value"],
    )


def test_c08_refinement_loop_contract(cache):
    with criterion(8, "loop honors thresholds, budgets, and branch order", 5.0):
        # (a) zero thresholds terminate at iteration 0 after one evaluation.
        script_evaluation(cache, DOC, S0, CFG, _perfect_script())
        backend = _CountingBackend(ReplayBackend(cache))
        gateway = LlmGateway(backend)
        trace = refine_loop(
            DOC, S0, CFG, RefineConfig(t_cov=0.0, t_cons=0.0, max_iters=3), gateway
        )
        assert trace.termination is Termination.THRESHOLDS_MET
        assert len(trace.summaries) == 1 and len(trace.reports) == 1
        assert trace.rendered_feedback == ()
        assert backend.calls == 4  # one evaluation, no rewrites

        # (b) a zero iteration budget returns the initial summary untouched.
        backend_b = _CountingBackend(ReplayBackend(cache))
        trace_b = refine_loop(
            DOC, S0, CFG, RefineConfig(max_iters=0), LlmGateway(backend_b)
        )
        assert backend_b.calls == 0
        assert trace_b.summaries == (S0,)
        assert trace_b.reports == ()
        assert trace_b.termination is Termination.MAX_ITERS_REACHED

        # (c) when both dimensions fail, coverage feedback is built first.
        s_both = SummaryText(
            id="doc-a2::both", source_id="doc-a2", text="An unrelated claim set."
        )
        script_evaluation(
            cache,
            DOC,
            s_both,
            CFG,
            EvalScript(
                doc_questions=["q1?", "q2?"],
                coverage_answers=[None, None],
                summary_qa=[("claim?", "alpha beta")],
                doc_answers=[None],
            ),
        )
        fb = construct_coverage_feedback(
            [RankedQuestion(1, "q1?"), RankedQuestion(2, "q2?")]
        )
        script_refinement(cache, DOC, s_both, fb.kind, fb.body, "rewritten once")
        trace_c = refine_loop(
            DOC,
            s_both,
            CFG,
            RefineConfig(t_cov=0.6, t_cons=0.73, max_iters=1),
            replay_gateway(cache),
        )
        assert [f.kind for f in trace_c.rendered_feedback] == [FeedbackKind.COVERAGE]

        # (d) thresholds crossed at iteration 2: 3 summaries, 2 feedback texts.
        doc_questions = ["k1?", "k2?"]
        texts = ["covers nothing yet", "covers half now", "covers everything now"]
        answers_by_step = [[None, None], ["a1", None], ["a1", "a2"]]
        summaries = [
            SummaryText(id=f"doc-a2::d{g}", source_id="doc-a2", text=t, generation=g)
            for g, t in enumerate(texts)
        ]
        for step, summary in enumerate(summaries):
            script_evaluation(
                cache,
                DOC,
                summary,
                CFG,
                EvalScript(
                    doc_questions=doc_questions,
                    coverage_answers=answers_by_step[step],
                    summary_qa=[("claim?", "held steady")],
                    doc_answers=["held steady"],
                ),
            )
        fb0 = construct_coverage_feedback(
            [RankedQuestion(1, "k1?"), RankedQuestion(2, "k2?")]
        )
        script_refinement(cache, DOC, summaries[0], fb0.kind, fb0.body, texts[1])
        fb1 = construct_coverage_feedback([RankedQuestion(2, "k2?")])
        script_refinement(cache, DOC, summaries[1], fb1.kind, fb1.body, texts[2])

        trace_d = refine_loop(
            DOC,
            summaries[0],
            CFG,
            RefineConfig(t_cov=0.6, t_cons=0.73, max_iters=5),
            replay_gateway(cache),
        )
        assert trace_d.termination is Termination.THRESHOLDS_MET
        assert len(trace_d.summaries) == 3
        assert len(trace_d.rendered_feedback) == 2
        assert len(trace_d.reports) == 3
        assert [s.text for s in trace_d.summaries] == texts


def test_c09_parser_robustness():
    with criterion(
        9, "structured-output parser recovers every pair in the case corpus", 1.0
    ):
        assert len(QA_BLOCK_CASES) + len(ANSWER_LIST_CASES) >= 30
        for name, raw, expected in QA_BLOCK_CASES:
            got = [(q.rank, q.question, a) for q, a in parse_qa_block(raw)]
            assert got == expected, name
        for name, raw, questions, expected in ANSWER_LIST_CASES:
            qset = QuestionSet(
                origin=TextSource.DOCUMENT,
                questions=tuple(
                    RankedQuestion(rank=i + 1, question=q)
                    for i, q in enumerate(questions)
                ),
            )
            answers = parse_answer_list(raw, qset)
            assert [r.answer for r in answers.records] == expected, name
        for name, raw in ZERO_PAIR_CASES:
            with pytest.raises(NoParsableQA):
                parse_qa_block(raw)
            with pytest.raises(NoParsableQA):
                parse_answer_list(
                    raw,
                    QuestionSet(
                        origin=TextSource.DOCUMENT,
                        questions=(RankedQuestion(1, "who?"),),
                    ),
                )


def test_c10_refinement_improves_scripted_coverage(cache):
    with criterion(
        10, "a revision answering previously unanswered questions raises coverage", 5.0
    ):
        doc_questions = [f"point {i}?" for i in range(1, 9)]
        s0 = SummaryText(
            id="doc-a2::dir", source_id="doc-a2", text="Initial thin summary."
        )
        script_evaluation(
            cache,
            DOC,
            s0,
            CFG,
            EvalScript(
                doc_questions=doc_questions,
                coverage_answers=["a1", "a2", None, None, None, None, None, None],
                summary_qa=[("claim?", "kept fact")],
                doc_answers=["kept fact"],
            ),
        )
        fb = construct_coverage_feedback(
            [RankedQuestion(r, f"point {r}?") for r in range(3, 9)]
        )
        revised_text = "Expanded summary answering points three through six."
        script_refinement(cache, DOC, s0, fb.kind, fb.body, revised_text)
        s1 = SummaryText(id="x", source_id="doc-a2", text=revised_text, generation=1)
        script_evaluation(
            cache,
            DOC,
            s1,
            CFG,
            EvalScript(
                doc_questions=doc_questions,
                coverage_answers=["a1", "a2", "a3", "a4", "a5", "a6", None, None],
                summary_qa=[("claim?", "kept fact")],
                doc_answers=["kept fact"],
            ),
        )
        trace = refine_loop(
            DOC,
            s0,
            CFG,
            RefineConfig(t_cov=0.6, t_cons=0.0, max_iters=3),
            replay_gateway(cache),
        )
        assert trace.termination is Termination.THRESHOLDS_MET
        assert len(trace.reports) == 2
        initial, refined = trace.reports[0], trace.reports[1]
        assert initial.coverage_score == 0.25
        assert refined.coverage_score == 0.75
        assert refined.coverage_score > initial.coverage_score
