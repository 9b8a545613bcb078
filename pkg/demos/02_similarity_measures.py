"""Compare the three answer-similarity measures and the threshold gate.

empm rewards exact or set-level token overlap, rouge scores clipped unigram
F1, and cossim compares embedding directions (the builtin hashing embedder
stands in for a real embedding model). Similarities at or below tau
contribute nothing to the consistency score.
"""

from sumeval import (
    HashEmbedder,
    SimilarityMeasure,
    answer_similarity,
    gated_contribution,
)

PAIRS = [
    ("16 phased elements", "16 phased elements"),
    ("sixteen elements", "16 phased elements"),
    ("40 watts", "60 watts"),
    ("filed in 2021", "the design was filed in 2021"),
    ("a thermal shunt", "an entirely unrelated phrase"),
]

TAU = 0.6


def main():
    embedder = HashEmbedder()
    header = f"{'summary answer':<22} {'document answer':<30} {'empm':>6} {'rouge':>6} {'cossim':>6}"
    print(header)
    print("-" * len(header))
    for a, b in PAIRS:
        scores = {
            m: answer_similarity(a, b, m, embedder=embedder)
            for m in SimilarityMeasure
        }
        print(
            f"{a:<22} {b:<30} "
            f"{scores[SimilarityMeasure.EMPM]:>6.2f} "
            f"{scores[SimilarityMeasure.ROUGE1_F1]:>6.2f} "
            f"{scores[SimilarityMeasure.COSINE]:>6.2f}"
        )

    print()
    print(f"threshold gate at tau = {TAU} (strict: s contributes only if s > tau)")
    for s in (0.9, 0.61, 0.6, 0.3):
        print(f"  s = {s:<5} -> contributes {gated_contribution(s, TAU)}")


if __name__ == "__main__":
    main()
