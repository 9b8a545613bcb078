"""Command-line entry point.

Subcommands: ``eval`` scores a corpus, ``refine`` runs the feedback loop,
``metaeval`` correlates persisted scores with human judgments, ``stats``
prints corpus statistics, and ``cache`` inspects or clears the completion
cache. Exit codes: 0 success, 1 validation/configuration problems, 2 backend
failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .errors import GatewayError, InvalidConfig, SumevalError
from .evaluator import evaluate
from .gateway import (
    CompletionCache,
    HttpChatBackend,
    HttpEmbedder,
    LlmGateway,
    ReplayBackend,
)
from .harness import (
    EvalResult,
    RefineResult,
    RunManifest,
    corpus_stats,
    load_corpus,
    load_results,
    persist_results,
    score_matrix_from_results,
)
from .metaeval import MetaEvalConfig, correlation_report
from .model import (
    DocumentText,
    EvalConfig,
    RefineConfig,
    SimilarityMeasure,
    SummaryText,
    validate_config,
    validate_refine_config,
)
from .refiner import refine_loop

CACHE_DIR_ENV = "SUMEVAL_CACHE_DIR"

# Which human-score dimensions each metric dimension is correlated against.
METRIC_TO_HUMAN_DIMS = {
    "coverage": ("coverage",),
    "consistency": ("consistency", "accuracy"),
}


def _question_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return (int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend-url", help="chat-completions-compatible base URL")
    common.add_argument("--model", default="default", help="model name sent to the backend")
    common.add_argument(
        "--sim",
        choices=[m.value for m in SimilarityMeasure],
        default=SimilarityMeasure.ROUGE1_F1.value,
        help="answer similarity measure",
    )
    common.add_argument("--tau", type=float, default=0.6, help="consistency threshold")
    common.add_argument(
        "--doc-questions", type=_question_range, default=(6, 12), metavar="MIN:MAX"
    )
    common.add_argument(
        "--sum-questions", type=_question_range, default=(4, 10), metavar="MIN:MAX"
    )
    common.add_argument("--top-k", type=int, default=None)
    common.add_argument("--replay-dir", help="completion cache directory")
    common.add_argument(
        "--strict-replay",
        action="store_true",
        help="serve completions from the cache only; error on misses",
    )
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--concurrency", type=int, default=4)
    common.add_argument("--out", default="sumeval-out", help="output directory")
    common.add_argument(
        "--embed-model",
        default=None,
        help="embeddings model for cossim (default: builtin hashing embedder)",
    )

    parser = argparse.ArgumentParser(prog="sumeval")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", parents=[common], help="score a corpus")
    p_eval.add_argument("corpus")

    p_refine = sub.add_parser("refine", parents=[common], help="refine a corpus")
    p_refine.add_argument("corpus")
    p_refine.add_argument("--tcov", type=float, default=0.60)
    p_refine.add_argument("--tcons", type=float, default=0.73)
    p_refine.add_argument("--max-iters", type=int, default=3)

    p_meta = sub.add_parser(
        "metaeval", parents=[common], help="correlate results with human scores"
    )
    p_meta.add_argument("results")
    p_meta.add_argument("--corpus", required=True, help="corpus file with human scores")
    p_meta.add_argument("--iterations", type=int, default=10000)
    p_meta.add_argument(
        "--granularity", choices=["auto", "summary", "system"], default="auto"
    )

    p_stats = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p_stats.add_argument("corpus")

    p_cache = sub.add_parser("cache", parents=[common], help="inspect or clear the cache")
    p_cache.add_argument("action", choices=["inspect", "clear"])

    return parser


def _eval_config(args) -> EvalConfig:
    cfg = EvalConfig(
        tau=args.tau,
        similarity=SimilarityMeasure(args.sim),
        doc_question_range=args.doc_questions,
        summary_question_range=args.sum_questions,
        top_k=args.top_k,
        temperature=1e-10,
        random_seed=args.seed,
    )
    validate_config(cfg)
    return cfg


def _cache_dir(args) -> str | None:
    return args.replay_dir or os.environ.get(CACHE_DIR_ENV)


def _gateway(args) -> tuple[LlmGateway, dict]:
    cache_dir = _cache_dir(args)
    cache = CompletionCache(cache_dir) if cache_dir else None
    if args.strict_replay:
        if cache is None:
            raise InvalidConfig(
                "replay_dir", "--strict-replay needs --replay-dir or SUMEVAL_CACHE_DIR"
            )
        backend = ReplayBackend(cache)
        descriptor = {"mode": "replay", "model": args.model, "base_url": None}
    else:
        if not args.backend_url:
            raise InvalidConfig(
                "backend_url", "--backend-url is required unless --strict-replay is set"
            )
        backend = HttpChatBackend(args.backend_url, cache=cache)
        descriptor = {"mode": "live", "model": args.model, "base_url": args.backend_url}
    embedder = None
    if args.embed_model and not args.strict_replay:
        embedder = HttpEmbedder(args.backend_url, args.embed_model)
    gateway = LlmGateway(
        backend,
        model=args.model,
        embedder=embedder,
        max_in_flight=max(1, args.concurrency),
    )
    return gateway, descriptor


def _fan_out(records, worker, concurrency: int) -> list:
    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        return list(pool.map(worker, records))


def cmd_eval(args) -> int:
    cfg = _eval_config(args)
    gateway, descriptor = _gateway(args)
    records = load_corpus(args.corpus)

    def worker(record) -> EvalResult:
        doc = DocumentText(id=record.doc_id, text=record.document)
        summary = SummaryText(
            id=f"{record.doc_id}::{record.system_id}",
            source_id=record.doc_id,
            text=record.summary,
        )
        return EvalResult(
            doc_id=record.doc_id,
            system_id=record.system_id,
            report=evaluate(doc, summary, cfg, gateway),
        )

    results = _fan_out(records, worker, args.concurrency)
    manifest = RunManifest(
        eval_config=cfg,
        corpus=os.fspath(args.corpus),
        seed=args.seed,
        backend=descriptor,
        created_at=RunManifest.now(),
    )
    results_path, _ = persist_results(manifest, results, args.out)
    print(f"wrote {results_path} ({len(results)} reports)")
    return 0


def cmd_refine(args) -> int:
    cfg = _eval_config(args)
    rcfg = RefineConfig(t_cov=args.tcov, t_cons=args.tcons, max_iters=args.max_iters)
    validate_refine_config(rcfg)
    gateway, descriptor = _gateway(args)
    records = load_corpus(args.corpus)

    def worker(record) -> RefineResult:
        doc = DocumentText(id=record.doc_id, text=record.document)
        initial = SummaryText(
            id=f"{record.doc_id}::{record.system_id}",
            source_id=record.doc_id,
            text=record.summary,
        )
        return RefineResult(
            doc_id=record.doc_id,
            system_id=record.system_id,
            trace=refine_loop(doc, initial, cfg, rcfg, gateway),
        )

    results = _fan_out(records, worker, args.concurrency)
    manifest = RunManifest(
        eval_config=cfg,
        refine_config=rcfg,
        corpus=os.fspath(args.corpus),
        seed=args.seed,
        backend=descriptor,
        created_at=RunManifest.now(),
    )
    results_path, _ = persist_results(manifest, results, args.out)
    print(f"wrote {results_path} ({len(results)} traces)")
    return 0


def cmd_metaeval(args) -> int:
    results = load_results(args.results)
    records = load_corpus(args.corpus)
    groups = {}
    for metric_dim, human_dims in METRIC_TO_HUMAN_DIMS.items():
        for human_dim in human_dims:
            matrix = score_matrix_from_results(results, records, metric_dim, human_dim)
            if len(matrix):
                groups[f"{metric_dim}~{human_dim}"] = matrix
    if not groups:
        print("no (metric, human) score overlap found", file=sys.stderr)
        return 1
    cfg = MetaEvalConfig(
        iterations=args.iterations, seed=args.seed, granularity=args.granularity
    )
    report = correlation_report(groups, cfg)
    header = f"{'group':<28} {'n':>4} {'level':<8} {'tau_b':>8} {'p':>10}"
    print(header)
    print("-" * len(header))
    for cell in report:
        if cell.unavailable:
            print(
                f"{cell.label:<28} {cell.n:>4} {cell.granularity.value:<8} "
                f"{'n/a':>8} {'n/a':>10}  ({cell.reason})"
            )
        else:
            print(
                f"{cell.label:<28} {cell.n:>4} {cell.granularity.value:<8} "
                f"{cell.tau:>8.4f} {cell.p_value:>10.5f} {cell.stars}"
            )
    if args.out:
        import json

        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "metaeval.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        print(f"wrote {path}")
    return 0


def cmd_stats(args) -> int:
    stats = corpus_stats(load_corpus(args.corpus))
    print(f"records:   {stats.record_count}")
    print(f"documents: {stats.document_count}")
    print(f"systems:   {stats.system_count}")
    print(
        f"document words: mean {stats.doc_words_mean:.1f} (std {stats.doc_words_std:.1f})"
    )
    print(
        f"summary words:  mean {stats.summary_words_mean:.1f} "
        f"(std {stats.summary_words_std:.1f})"
    )
    return 0


def cmd_cache(args) -> int:
    cache_dir = _cache_dir(args)
    if not cache_dir:
        raise InvalidConfig("replay_dir", "cache needs --replay-dir or SUMEVAL_CACHE_DIR")
    cache = CompletionCache(cache_dir)
    if args.action == "inspect":
        digests = cache.digests()
        total = sum(
            os.path.getsize(os.path.join(cache_dir, name)) for name in digests
        )
        print(f"{len(digests)} cached completion(s), {total} bytes, in {cache_dir}")
        for name in digests[:20]:
            print(f"  {name}")
        if len(digests) > 20:
            print(f"  ... and {len(digests) - 20} more")
    else:
        removed = cache.clear()
        print(f"removed {removed} cache file(s) from {cache_dir}")
    return 0


_COMMANDS = {
    "eval": cmd_eval,
    "refine": cmd_refine,
    "metaeval": cmd_metaeval,
    "stats": cmd_stats,
    "cache": cmd_cache,
}


def cli_dispatch(argv) -> int:
    """Parse and run; returns the process exit code instead of exiting."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (SumevalError, OSError, ValueError) as exc:
        # A backend failure may arrive wrapped (for example inside a
        # RefinementError); walk the cause chain before classifying.
        cause: BaseException | None = exc
        while cause is not None:
            if isinstance(cause, GatewayError):
                print(
                    f"backend failure: {type(cause).__name__}: {cause}",
                    file=sys.stderr,
                )
                return 2
            cause = cause.__cause__
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> int:
    return cli_dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
