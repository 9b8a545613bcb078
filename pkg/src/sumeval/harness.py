"""Corpus ingestion, corpus statistics, and result persistence.

Corpora are UTF-8 line-delimited JSON, one record per line with fields
``doc_id``, ``document``, ``system_id``, ``summary``, an optional ``human``
map of dimension name to score, and an optional ``split`` tag. Results are
persisted the same way, one line per (doc_id, system_id), next to a manifest
sidecar describing the run. Rewriting results replaces the file atomically,
and lines are sorted by key so identical runs produce identical bytes.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import statistics
from dataclasses import dataclass

from .errors import DuplicateKey, EmptyCorpus, ParseError
from .model import (
    EvalConfig,
    EvaluationReport,
    RefineConfig,
    RefinementTrace,
    count_words,
)

TOOLKIT_VERSION = "0.1.0"

HUMAN_DIMENSIONS = frozenset(
    {
        "coverage",
        "consistency",
        "coherence",
        "fluency",
        "relevance",
        "accuracy",
        "clarity",
        "overall",
    }
)

_DIMENSION_ALIASES = {
    "cov": "coverage",
    "cons": "consistency",
    "coh": "coherence",
    "flu": "fluency",
    "rel": "relevance",
    "acc": "accuracy",
    "clar": "clarity",
}


def normalize_dimension(name: str) -> str:
    """Canonical lowercase dimension name; raises ValueError on unknowns."""
    key = name.strip().lower()
    key = _DIMENSION_ALIASES.get(key, key)
    if key not in HUMAN_DIMENSIONS:
        raise ValueError(f"unknown human-score dimension: {name!r}")
    return key


@dataclass(frozen=True)
class CorpusRecord:
    doc_id: str
    document: str
    system_id: str
    summary: str
    human: dict | None = None
    split: str | None = None

    def to_dict(self) -> dict:
        out = {
            "doc_id": self.doc_id,
            "document": self.document,
            "system_id": self.system_id,
            "summary": self.summary,
        }
        if self.human is not None:
            out["human"] = dict(self.human)
        if self.split is not None:
            out["split"] = self.split
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusRecord":
        return cls(
            doc_id=d["doc_id"],
            document=d["document"],
            system_id=d["system_id"],
            summary=d["summary"],
            human=dict(d["human"]) if d.get("human") is not None else None,
            split=d.get("split"),
        )


_REQUIRED_FIELDS = ("doc_id", "document", "system_id", "summary")


def load_corpus(path: str | os.PathLike) -> list[CorpusRecord]:
    """Parse a corpus file, validating every line before failing.

    Streaming single pass; on any rejects a ParseError (or DuplicateKey when
    every reject is a duplicate) is raised carrying (line_number, reason) for
    all of them.
    """
    records: list[CorpusRecord] = []
    rejects: list[tuple[int, str]] = []
    duplicate_only = True
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                rejects.append((lineno, f"invalid JSON: {exc}"))
                duplicate_only = False
                continue
            reason = _validate_record(raw)
            if reason:
                rejects.append((lineno, reason))
                duplicate_only = False
                continue
            key = (raw["doc_id"], raw["system_id"])
            if key in seen:
                rejects.append((lineno, f"duplicate (doc_id, system_id): {key}"))
                continue
            seen.add(key)
            human = None
            if raw.get("human") is not None:
                human = {
                    normalize_dimension(k): float(v) for k, v in raw["human"].items()
                }
            records.append(
                CorpusRecord(
                    doc_id=raw["doc_id"],
                    document=raw["document"],
                    system_id=raw["system_id"],
                    summary=raw["summary"],
                    human=human,
                    split=raw.get("split"),
                )
            )
    if rejects:
        summary = "; ".join(f"line {ln}: {why}" for ln, why in rejects[:5])
        if len(rejects) > 5:
            summary += f"; and {len(rejects) - 5} more"
        cls = DuplicateKey if duplicate_only else ParseError
        raise cls(f"{len(rejects)} rejected corpus line(s): {summary}", rejects)
    return records


def _validate_record(raw) -> str | None:
    if not isinstance(raw, dict):
        return "record is not a JSON object"
    for name in _REQUIRED_FIELDS:
        if name not in raw:
            return f"missing required field {name!r}"
        if not isinstance(raw[name], str) or not raw[name].strip():
            return f"field {name!r} must be a non-empty string"
    human = raw.get("human")
    if human is not None:
        if not isinstance(human, dict):
            return "field 'human' must be an object"
        for key, value in human.items():
            try:
                normalize_dimension(key)
            except ValueError as exc:
                return str(exc)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                return f"human score {key!r} must be numeric"
    split = raw.get("split")
    if split is not None and not isinstance(split, str):
        return "field 'split' must be a string"
    return None


def save_corpus(records, path: str | os.PathLike) -> None:
    """Write records as line-delimited JSON; inverse of load_corpus."""
    _atomic_write_lines(path, (_dump_line(r.to_dict()) for r in records))


@dataclass(frozen=True)
class CorpusStats:
    record_count: int
    document_count: int
    system_count: int
    doc_words_mean: float
    doc_words_std: float
    summary_words_mean: float
    summary_words_std: float

    def to_dict(self) -> dict:
        return {
            "record_count": self.record_count,
            "document_count": self.document_count,
            "system_count": self.system_count,
            "doc_words_mean": self.doc_words_mean,
            "doc_words_std": self.doc_words_std,
            "summary_words_mean": self.summary_words_mean,
            "summary_words_std": self.summary_words_std,
        }


def corpus_stats(records) -> CorpusStats:
    """Mean and population standard deviation of word counts.

    Document statistics run over distinct doc_ids (a document repeated for
    several systems counts once); summary statistics run over every record.
    """
    records = list(records)
    if not records:
        raise EmptyCorpus("no records")
    docs_seen: dict[str, int] = {}
    for r in records:
        docs_seen.setdefault(r.doc_id, count_words(r.document))
    doc_counts = list(docs_seen.values())
    sum_counts = [count_words(r.summary) for r in records]
    return CorpusStats(
        record_count=len(records),
        document_count=len(docs_seen),
        system_count=len({r.system_id for r in records}),
        doc_words_mean=statistics.fmean(doc_counts),
        doc_words_std=statistics.pstdev(doc_counts),
        summary_words_mean=statistics.fmean(sum_counts),
        summary_words_std=statistics.pstdev(sum_counts),
    )


# --- run manifests and result persistence -------------------------------------


@dataclass(frozen=True)
class RunManifest:
    """Snapshot of everything that determines a run's outputs.

    The manifest id hashes the deterministic fields only (not the
    timestamp), so re-running the same configuration produces the same id
    and results files reference it stably.
    """

    eval_config: EvalConfig
    corpus: str
    seed: int
    backend: dict
    refine_config: RefineConfig | None = None
    toolkit_version: str = TOOLKIT_VERSION
    created_at: str = ""

    @staticmethod
    def now() -> str:
        return datetime.datetime.now(datetime.timezone.utc).isoformat()

    @property
    def manifest_id(self) -> str:
        stable = {
            "eval_config": self.eval_config.to_dict(),
            "refine_config": (
                self.refine_config.to_dict() if self.refine_config else None
            ),
            "corpus": self.corpus,
            "seed": self.seed,
            "backend": self.backend,
            "toolkit_version": self.toolkit_version,
        }
        blob = json.dumps(stable, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "manifest_id": self.manifest_id,
            "eval_config": self.eval_config.to_dict(),
            "refine_config": (
                self.refine_config.to_dict() if self.refine_config else None
            ),
            "corpus": self.corpus,
            "seed": self.seed,
            "backend": dict(self.backend),
            "toolkit_version": self.toolkit_version,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            eval_config=EvalConfig.from_dict(d["eval_config"]),
            refine_config=(
                RefineConfig.from_dict(d["refine_config"])
                if d.get("refine_config")
                else None
            ),
            corpus=d["corpus"],
            seed=d["seed"],
            backend=dict(d["backend"]),
            toolkit_version=d["toolkit_version"],
            created_at=d.get("created_at", ""),
        )


@dataclass(frozen=True)
class EvalResult:
    doc_id: str
    system_id: str
    report: EvaluationReport

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "system_id": self.system_id,
            "report": self.report.to_dict(),
        }


@dataclass(frozen=True)
class RefineResult:
    doc_id: str
    system_id: str
    trace: RefinementTrace

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "system_id": self.system_id,
            "trace": self.trace.to_dict(),
        }


RESULTS_FILENAME = "results.jsonl"
MANIFEST_FILENAME = "manifest.json"


def _dump_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _atomic_write_lines(path, lines) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    os.replace(tmp, path)


def persist_results(manifest: RunManifest, results, out_dir) -> tuple[str, str]:
    """Write results.jsonl plus the manifest sidecar; returns both paths.

    Lines are ordered by (doc_id, system_id) and tagged with the manifest id,
    so the results file is byte-stable across identical runs even though the
    manifest records a fresh timestamp.
    """
    os.makedirs(out_dir, exist_ok=True)
    ordered = sorted(results, key=lambda r: (r.doc_id, r.system_id))
    results_path = os.path.join(out_dir, RESULTS_FILENAME)
    manifest_path = os.path.join(out_dir, MANIFEST_FILENAME)
    _atomic_write_lines(
        results_path,
        (
            _dump_line({**r.to_dict(), "manifest_id": manifest.manifest_id})
            for r in ordered
        ),
    )
    tmp = manifest_path + f".tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest.to_dict(), sort_keys=True, indent=2, ensure_ascii=False))
        fh.write("\n")
    os.replace(tmp, manifest_path)
    return results_path, manifest_path


def score_matrix_from_results(results, records, metric_dimension, human_dimension):
    """Join persisted reports with corpus human scores into a ScoreMatrix.

    Only EvalResults whose corpus record carries the requested human
    dimension contribute rows; the metric side is the report's coverage or
    consistency score.
    """
    from .metaeval import Granularity, ScoreMatrix, ScoreRow

    if metric_dimension not in ("coverage", "consistency"):
        raise ValueError(f"unknown metric dimension: {metric_dimension!r}")
    human_dimension = normalize_dimension(human_dimension)
    human_by_key = {
        (r.doc_id, r.system_id): r.human for r in records if r.human is not None
    }
    rows = []
    for res in results:
        if not isinstance(res, EvalResult):
            continue
        human = human_by_key.get((res.doc_id, res.system_id))
        if human is None or human_dimension not in human:
            continue
        metric = (
            res.report.coverage_score
            if metric_dimension == "coverage"
            else res.report.consistency_score
        )
        rows.append(
            ScoreRow(
                item_id=res.doc_id,
                system_id=res.system_id,
                metric_score=metric,
                human_score=human[human_dimension],
            )
        )
    return ScoreMatrix(rows=tuple(rows), granularity=Granularity.SUMMARY_LEVEL)


def load_results(path) -> list:
    """Read back persisted results as EvalResult / RefineResult values."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            if "report" in d:
                out.append(
                    EvalResult(
                        doc_id=d["doc_id"],
                        system_id=d["system_id"],
                        report=EvaluationReport.from_dict(d["report"]),
                    )
                )
            elif "trace" in d:
                out.append(
                    RefineResult(
                        doc_id=d["doc_id"],
                        system_id=d["system_id"],
                        trace=RefinementTrace.from_dict(d["trace"]),
                    )
                )
            else:
                raise ParseError(f"result line has neither report nor trace: {line[:80]}")
    return out
