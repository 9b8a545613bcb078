"""Validate a metric against human judgments.

Meta-evaluation asks: do the metric's scores rank summaries the way humans
do? Kendall's tau-b handles the heavy ties typical of Likert annotations,
the permutation test attaches a significance level, and Krippendorff's
alpha checks that the human annotations themselves agree enough to be worth
correlating against.
"""

import numpy as np

from sumeval import (
    AgreementLevel,
    AnnotationTable,
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


def main():
    rng = np.random.default_rng(11)

    # Six systems scored on twenty items: metric roughly tracks the humans.
    rows = []
    for s, bias in enumerate([0.2, 0.35, 0.5, 0.6, 0.75, 0.9]):
        for i in range(20):
            human = np.clip(bias + rng.normal(0, 0.15), 0, 1) * 4 + 1  # Likert 1-5
            metric = np.clip(bias + rng.normal(0, 0.1), 0, 1)
            rows.append(ScoreRow(f"item{i}", f"sys{s}", float(metric), float(round(human))))
    matrix = ScoreMatrix(rows=tuple(rows), granularity=Granularity.SUMMARY_LEVEL)

    tau = kendall_tau_b(matrix.metric_scores(), matrix.human_scores())
    p = permutation_pvalue(matrix.metric_scores(), matrix.human_scores(), seed=1)
    print(f"summary-level: n={len(matrix)}  tau_b={tau:.3f}  p={p:.4f}")

    system = aggregate_system_level(matrix)
    tau_sys = kendall_tau_b(system.metric_scores(), system.human_scores())
    p_sys = permutation_pvalue(system.metric_scores(), system.human_scores(), seed=1)
    print(f"system-level:  n={len(system)}  tau_b={tau_sys:.3f}  p={p_sys:.4f}")
    print()

    report = correlation_report(
        {"summary-level": matrix, "system-level": system},
        MetaEvalConfig(iterations=10000, seed=1, granularity="summary"),
    )
    for cell in report:
        print(
            f"{cell.label:<14} tau_b={cell.tau:.3f}  p={cell.p_value:.4f} "
            f"{cell.stars or '(n.s.)'}"
        )
    print()

    # Inter-annotator agreement over a partially filled rating table.
    units = [f"u{i}" for i in range(12)]
    raters = ["r1", "r2", "r3"]
    values = {}
    for i, unit in enumerate(units):
        base = 1 + (i * 7) % 5
        for j, rater in enumerate(raters):
            if (i + j) % 4 == 0 and i % 3 == 0:
                continue  # missing cell
            noisy = min(5, max(1, base + (1 if (i + j) % 5 == 0 else 0)))
            values[(unit, rater)] = noisy
    table = AnnotationTable(units=tuple(units), raters=tuple(raters), values=values)
    for level in (AgreementLevel.NOMINAL, AgreementLevel.ORDINAL):
        print(f"krippendorff alpha ({level.value}): {krippendorff_alpha(table, level):.3f}")


if __name__ == "__main__":
    main()
