import json

import pytest

from sumeval.errors import DuplicateKey, EmptyCorpus, ParseError
from sumeval.harness import (
    CorpusRecord,
    EvalResult,
    RunManifest,
    corpus_stats,
    load_corpus,
    load_results,
    normalize_dimension,
    persist_results,
    save_corpus,
    score_matrix_from_results,
)
from sumeval.metaeval import Granularity
from sumeval.model import (
    ConsistencyTriplet,
    Diagnostics,
    EvalConfig,
    EvaluationReport,
    RankedQuestion,
)


def _write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _record_line(doc_id="d1", system_id="s1", **extra):
    rec = {
        "doc_id": doc_id,
        "document": "some document text here",
        "system_id": system_id,
        "summary": "a summary",
    }
    rec.update(extra)
    return json.dumps(rec)


class TestLoadCorpus:
    def test_three_valid_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(
            path,
            [
                _record_line("d1", "s1"),
                _record_line("d1", "s2"),
                _record_line("d2", "s1", human={"coverage": 4.0}, split="test"),
            ],
        )
        records = load_corpus(path)
        assert len(records) == 3
        assert records[2].human == {"coverage": 4.0}
        assert records[2].split == "test"

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_record_line("d1", "s1"), _record_line("d1", "s1")])
        with pytest.raises(DuplicateKey) as exc:
            load_corpus(path)
        assert exc.value.rejects == [(2, "duplicate (doc_id, system_id): ('d1', 's1')")]

    def test_missing_field_reports_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        bad = json.dumps({"doc_id": "d", "system_id": "s", "summary": "x"})
        _write_lines(path, [_record_line(), bad])
        with pytest.raises(ParseError) as exc:
            load_corpus(path)
        assert exc.value.rejects[0][0] == 2
        assert "document" in exc.value.rejects[0][1]

    def test_invalid_json_and_all_rejects_gathered(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, ["{not json", _record_line(), "[1,2]"])
        with pytest.raises(ParseError) as exc:
            load_corpus(path)
        assert [line for line, _ in exc.value.rejects] == [1, 3]

    def test_unknown_human_dimension_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_record_line(human={"sentiment": 1.0})])
        with pytest.raises(ParseError):
            load_corpus(path)

    def test_dimension_aliases_normalized(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_record_line(human={"Acc": 3.0, "Coh": 2.0})])
        (record,) = load_corpus(path)
        assert record.human == {"accuracy": 3.0, "coherence": 2.0}

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(_record_line() + "\n\n\n", encoding="utf-8")
        assert len(load_corpus(path)) == 1

    def test_save_then_load_is_identity(self, tmp_path):
        records = [
            CorpusRecord("d1", "text one two", "s1", "sum one", {"coverage": 3.0}, "dev"),
            CorpusRecord("d2", "text three", "s1", "sum two", None, None),
        ]
        path = tmp_path / "round.jsonl"
        save_corpus(records, path)
        assert load_corpus(path) == records


class TestNormalizeDimension:
    def test_aliases(self):
        assert normalize_dimension("Acc") == "accuracy"
        assert normalize_dimension("CONS") == "consistency"
        assert normalize_dimension("coverage") == "coverage"

    def test_unknown(self):
        with pytest.raises(ValueError):
            normalize_dimension("vibes")


class TestCorpusStats:
    def test_hand_computed_mean_and_population_std(self):
        records = [
            CorpusRecord("d1", " ".join(["w"] * 10), "s1", "a b c"),
            CorpusRecord("d2", " ".join(["w"] * 20), "s1", "a b c d e"),
        ]
        stats = corpus_stats(records)
        assert stats.doc_words_mean == 15.0
        assert stats.doc_words_std == 5.0
        assert stats.summary_words_mean == 4.0
        assert stats.summary_words_std == 1.0

    def test_repeated_documents_counted_once(self):
        records = [
            CorpusRecord("d1", " ".join(["w"] * 10), "s1", "x"),
            CorpusRecord("d1", " ".join(["w"] * 10), "s2", "x y"),
        ]
        stats = corpus_stats(records)
        assert stats.document_count == 1
        assert stats.system_count == 2
        assert stats.record_count == 2
        assert stats.doc_words_mean == 10.0

    def test_single_record_std_zero(self):
        stats = corpus_stats([CorpusRecord("d", "a b", "s", "a")])
        assert stats.doc_words_std == 0.0

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            corpus_stats([])


def _report(cov=0.5, cons=0.25) -> EvaluationReport:
    return EvaluationReport(
        coverage_score=cov,
        consistency_score=cons,
        coverage_feedback=(RankedQuestion(1, "missing?"),),
        consistency_feedback=(ConsistencyTriplet("q?", "a", None, 0.0),),
        diagnostics=Diagnostics(
            doc_question_count=2,
            answerable_count=1,
            summary_question_count=2,
            fact_similarities=(0.5, 0.0),
            tau=0.6,
        ),
    )


def _manifest() -> RunManifest:
    return RunManifest(
        eval_config=EvalConfig(),
        corpus="corpus.jsonl",
        seed=0,
        backend={"mode": "replay", "model": "default", "base_url": None},
        created_at=RunManifest.now(),
    )


class TestPersistence:
    def test_round_trip_is_bit_exact(self, tmp_path):
        results = [
            EvalResult("d2", "s1", _report(0.75, 1 / 3)),
            EvalResult("d1", "s1", _report()),
        ]
        persist_results(_manifest(), results, tmp_path)
        loaded = load_results(tmp_path / "results.jsonl")
        assert loaded == sorted(results, key=lambda r: (r.doc_id, r.system_id))
        assert loaded[1].report.consistency_score == 1 / 3

    def test_lines_sorted_by_key_and_manifest_id_attached(self, tmp_path):
        results = [
            EvalResult("d2", "s1", _report()),
            EvalResult("d1", "s2", _report()),
            EvalResult("d1", "s1", _report()),
        ]
        manifest = _manifest()
        results_path, manifest_path = persist_results(manifest, results, tmp_path)
        lines = [json.loads(l) for l in open(results_path, encoding="utf-8")]
        assert [(l["doc_id"], l["system_id"]) for l in lines] == [
            ("d1", "s1"),
            ("d1", "s2"),
            ("d2", "s1"),
        ]
        assert all(l["manifest_id"] == manifest.manifest_id for l in lines)
        sidecar = json.load(open(manifest_path, encoding="utf-8"))
        assert sidecar["manifest_id"] == manifest.manifest_id

    def test_rerun_overwrites_atomically_and_identically(self, tmp_path):
        results = [EvalResult("d1", "s1", _report())]
        persist_results(_manifest(), results, tmp_path)
        first = (tmp_path / "results.jsonl").read_bytes()
        persist_results(_manifest(), results, tmp_path)
        assert (tmp_path / "results.jsonl").read_bytes() == first

    def test_manifest_id_ignores_timestamp(self):
        m1 = RunManifest(
            eval_config=EvalConfig(),
            corpus="c",
            seed=1,
            backend={"mode": "replay"},
            created_at="2026-01-01T00:00:00+00:00",
        )
        m2 = RunManifest(
            eval_config=EvalConfig(),
            corpus="c",
            seed=1,
            backend={"mode": "replay"},
            created_at="2026-02-02T00:00:00+00:00",
        )
        assert m1.manifest_id == m2.manifest_id
        m3 = RunManifest(
            eval_config=EvalConfig(tau=0.3),
            corpus="c",
            seed=1,
            backend={"mode": "replay"},
        )
        assert m3.manifest_id != m1.manifest_id

    def test_manifest_round_trip(self):
        manifest = _manifest()
        assert RunManifest.from_dict(manifest.to_dict()) == manifest

    def test_unwritable_out_dir(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            persist_results(_manifest(), [], blocker / "sub")


class TestScoreMatrixFromResults:
    def test_join_on_keys_and_dimension(self):
        records = [
            CorpusRecord("d1", "doc", "s1", "sum", {"coverage": 4.0}),
            CorpusRecord("d2", "doc", "s1", "sum", {"accuracy": 2.0}),
            CorpusRecord("d3", "doc", "s1", "sum", None),
        ]
        results = [
            EvalResult("d1", "s1", _report(cov=0.9)),
            EvalResult("d2", "s1", _report(cons=0.8)),
            EvalResult("d3", "s1", _report()),
        ]
        cov = score_matrix_from_results(results, records, "coverage", "coverage")
        assert [(r.item_id, r.metric_score, r.human_score) for r in cov.rows] == [
            ("d1", 0.9, 4.0)
        ]
        cons = score_matrix_from_results(results, records, "consistency", "accuracy")
        assert [(r.item_id, r.metric_score, r.human_score) for r in cons.rows] == [
            ("d2", 0.8, 2.0)
        ]
        assert cov.granularity is Granularity.SUMMARY_LEVEL
