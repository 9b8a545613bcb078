"""sumeval: reference-free QA-based summary scoring, refinement, and meta-evaluation.

The usual entry points:

* ``evaluate(doc, summary, cfg, gateway)`` scores one summary on coverage and
  factual consistency and returns a report with structured feedback.
* ``refine_loop(doc, initial, ecfg, rcfg, gateway)`` turns that feedback into
  iterative rewrites until quality thresholds are met.
* ``kendall_tau_b`` / ``permutation_pvalue`` / ``krippendorff_alpha`` support
  validating metric scores against human judgments.
* ``load_corpus`` / ``persist_results`` plus the ``sumeval`` CLI handle batch
  runs over line-delimited corpora.
"""

from .errors import (
    BackendUnreachable,
    CorpusError,
    DegenerateInput,
    DimensionMismatch,
    DuplicateKey,
    EmptyCorpus,
    EmptyFeedback,
    EmptyQuestionSet,
    EmptyRevision,
    GatewayError,
    HttpStatus,
    InsufficientData,
    InvalidConfig,
    MissingEmbedder,
    MissingSlot,
    NoParsableQA,
    ParseError,
    RefinementError,
    ReplayMiss,
    RequestTimeout,
    SumevalError,
    ZeroVector,
)
from .evaluator import (
    ConsistencyFact,
    ConsistencyResult,
    CoverageResult,
    consistency_evaluate,
    consistency_score_from_similarities,
    coverage_evaluate,
    coverage_score_from_counts,
    evaluate,
    generate_document_questions,
    generate_summary_qa,
    report_scores_consistent,
    topk_filter,
)
from .gateway import (
    CacheKey,
    CompletionCache,
    CompletionRequest,
    HashEmbedder,
    HttpChatBackend,
    HttpEmbedder,
    LlmGateway,
    ReplayBackend,
    format_qa_block,
    parse_answer_list,
    parse_qa_block,
)
from .harness import (
    CorpusRecord,
    CorpusStats,
    EvalResult,
    RefineResult,
    RunManifest,
    corpus_stats,
    load_corpus,
    load_results,
    persist_results,
    save_corpus,
    score_matrix_from_results,
)
from .metaeval import (
    AgreementLevel,
    AnnotationTable,
    CorrelationCell,
    CorrelationReport,
    Granularity,
    MetaEvalConfig,
    ScoreMatrix,
    ScoreRow,
    aggregate_system_level,
    correlation_report,
    kendall_tau_b,
    krippendorff_alpha,
    permutation_pvalue,
)
from .model import (
    AnswerRecord,
    AnswerSet,
    ConsistencyTriplet,
    Diagnostics,
    DocumentText,
    EvalConfig,
    EvaluationReport,
    FeedbackKind,
    FeedbackText,
    QuestionSet,
    RankedQuestion,
    RefineConfig,
    RefinementTrace,
    SimilarityMeasure,
    SummaryText,
    Termination,
    TextSource,
    validate_config,
    validate_refine_config,
)
from .prompts import UNANSWERABLE, TemplateId, render_prompt
from .refiner import (
    construct_consistency_feedback,
    construct_coverage_feedback,
    initial_summarize,
    refine_loop,
    refine_step,
)
from .textsim import (
    EmbeddingVector,
    answer_similarity,
    cosine_similarity,
    empm_similarity,
    gated_contribution,
    rouge1_f1,
    tokenize,
)

__version__ = "0.1.0"
