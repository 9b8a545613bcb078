"""Deterministic answer-similarity measures and the threshold gate.

Three interchangeable measures score how well a summary's answer matches the
document's answer for the same question:

* empm: exact string match after trimming and lowercasing, else Jaccard
  overlap of the deduplicated token sets
* rouge1_f1: clipped unigram-count F1 over token multisets
* cosine: angle between embedding vectors, clamped to [0, 1]

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable

from .errors import DimensionMismatch, MissingEmbedder, ZeroVector
from .model import SimilarityMeasure

# A token bag is a multiset of lowercase tokens.
TokenBag = Counter

# Runs of unicode alphanumerics; excludes underscore, which \w would keep.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> TokenBag:
    """Lowercase and split on runs of non-alphanumerics; empty input gives an
    empty bag."""
    return Counter(_TOKEN_RE.findall(text.lower()))


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-length real vector; all components must be finite."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) < 1:
            raise ValueError("embedding dimension must be >= 1")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding components must be finite")

    @property
    def dim(self) -> int:
        return len(self.values)


def empm_similarity(a: str, b: str) -> float:
    """Exact/partial match: 1.0 on trimmed case-insensitive equality, else the
    Jaccard index of the two token sets (0.0 when both sets are empty)."""
    if a.strip().lower() == b.strip().lower():
        return 1.0
    sa, sb = set(tokenize(a)), set(tokenize(b))
    union = sa | sb
    if not union:
        return 0.0
    return len(sa & sb) / len(union)


def rouge1_f1(candidate: str, reference: str) -> float:
    """Unigram F1 with clipped multiset counts.

    overlap = sum over tokens of min(count in candidate, count in reference);
    P = overlap/|candidate|, R = overlap/|reference|, F1 their harmonic mean.
    Returns 0.0 if either side is empty or nothing overlaps.
    """
    cand, ref = tokenize(candidate), tokenize(reference)
    n_cand, n_ref = sum(cand.values()), sum(ref.values())
    if n_cand == 0 or n_ref == 0:
        return 0.0
    overlap = sum(min(count, ref[tok]) for tok, count in cand.items())
    if overlap == 0:
        return 0.0
    precision = overlap / n_cand
    recall = overlap / n_ref
    return 2 * precision * recall / (precision + recall)


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Cosine of the angle between u and v, clamped to [0, 1].

    Negative cosines clamp to 0 so the value can feed the threshold gate
    directly. A single zero-norm vector scores 0.0; two zero-norm vectors
    raise ZeroVector.
    """
    if u.dim != v.dim:
        raise DimensionMismatch(f"dims differ: {u.dim} vs {v.dim}")
    norm_u = math.sqrt(sum(x * x for x in u.values))
    norm_v = math.sqrt(sum(x * x for x in v.values))
    if norm_u == 0.0 and norm_v == 0.0:
        raise ZeroVector("both vectors have zero norm")
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    dot = sum(x * y for x, y in zip(u.values, v.values))
    return min(1.0, max(0.0, dot / (norm_u * norm_v)))


Embedder = Callable[[str], EmbeddingVector]


def answer_similarity(
    a: str,
    b: str,
    measure: SimilarityMeasure,
    embedder: Embedder | None = None,
) -> float:
    """Dispatch to the configured measure; cosine requires an embedder."""
    if measure is SimilarityMeasure.EMPM:
        return empm_similarity(a, b)
    if measure is SimilarityMeasure.ROUGE1_F1:
        return rouge1_f1(a, b)
    if measure is SimilarityMeasure.COSINE:
        if embedder is None:
            raise MissingEmbedder("cosine similarity needs an embedding function")
        return cosine_similarity(embedder(a), embedder(b))
    raise ValueError(f"unknown similarity measure: {measure!r}")


def gated_contribution(s: float, tau: float) -> float:
    """s if s is strictly above tau, else 0.0. Boundary values are gated out."""
    return s if s > tau else 0.0
