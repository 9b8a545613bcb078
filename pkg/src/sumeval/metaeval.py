"""Rank statistics for validating metric quality against human judgments.

Provides the tie-corrected Kendall rank correlation, a permutation
significance test (exhaustive for short vectors, seeded Monte-Carlo
otherwise), chance-corrected inter-annotator agreement over partially
filled rating tables, and assembly of correlation report tables with
significance stars.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DegenerateInput, InsufficientData


class Granularity(enum.Enum):
    SUMMARY_LEVEL = "summary"
    SYSTEM_LEVEL = "system"


class AgreementLevel(enum.Enum):
    NOMINAL = "nominal"
    ORDINAL = "ordinal"


@dataclass(frozen=True)
class ScoreRow:
    item_id: str
    system_id: str
    metric_score: float
    human_score: float

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "system_id": self.system_id,
            "metric_score": self.metric_score,
            "human_score": self.human_score,
        }


@dataclass(frozen=True)
class ScoreMatrix:
    """Paired metric/human scores, one row per (item, system)."""

    rows: tuple[ScoreRow, ...]
    granularity: Granularity = Granularity.SUMMARY_LEVEL

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        keys = [(r.item_id, r.system_id) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (item_id, system_id) rows")

    def __len__(self) -> int:
        return len(self.rows)

    def metric_scores(self) -> list[float]:
        return [r.metric_score for r in self.rows]

    def human_scores(self) -> list[float]:
        return [r.human_score for r in self.rows]

    def system_ids(self) -> set[str]:
        return {r.system_id for r in self.rows}


@dataclass(frozen=True)
class AnnotationTable:
    """Ratings indexed by (unit, rater); missing cells are simply absent."""

    units: tuple
    raters: tuple
    values: Mapping

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "raters", tuple(self.raters))
        object.__setattr__(self, "values", dict(self.values))
        if len(self.raters) < 2:
            raise ValueError("at least two raters are required")
        known = set(self.units)
        known_raters = set(self.raters)
        for unit, rater in self.values:
            if unit not in known or rater not in known_raters:
                raise ValueError(f"rating references unknown unit/rater: {(unit, rater)}")

    def unit_ratings(self) -> list[list]:
        """Per-unit value lists in rater order, keeping only rated cells."""
        out = []
        for unit in self.units:
            vals = [
                self.values[(unit, rater)]
                for rater in self.raters
                if (unit, rater) in self.values
            ]
            out.append(vals)
        return out


# --- Kendall tau-b ---------------------------------------------------------------


def _validated_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    ax = np.asarray(x, dtype=float)
    ay = np.asarray(y, dtype=float)
    if ax.ndim != 1 or ay.ndim != 1 or len(ax) != len(ay):
        raise ValueError("inputs must be 1-d vectors of equal length")
    if len(ax) < 2:
        raise DegenerateInput("need at least two observations")
    if np.all(ax == ax[0]):
        raise DegenerateInput("all x values are tied")
    if np.all(ay == ay[0]):
        raise DegenerateInput("all y values are tied")
    return ax, ay


def _pair_signs(v: np.ndarray) -> np.ndarray:
    """Signs of v[i] - v[j] over all i < j pairs, flattened."""
    n = len(v)
    iu, jv = np.triu_indices(n, 1)
    return np.sign(v[iu] - v[jv]).astype(np.int8)


def _tau_from_signs(sx: np.ndarray, sy: np.ndarray) -> float:
    prod = sx.astype(np.int16) * sy
    concordant = int((prod > 0).sum())
    discordant = int((prod < 0).sum())
    tied_x_only = int(((sx == 0) & (sy != 0)).sum())
    tied_y_only = int(((sy == 0) & (sx != 0)).sum())
    denom = math.sqrt(
        float(concordant + discordant + tied_x_only)
        * float(concordant + discordant + tied_y_only)
    )
    return (concordant - discordant) / denom


def kendall_tau_b(x, y) -> float:
    """Tie-corrected Kendall rank correlation in [-1, 1].

    tau_b = (C - D) / sqrt((C + D + Tx) (C + D + Ty)) where C and D count
    concordant and discordant pairs and Tx / Ty count pairs tied only in x /
    only in y. Raises DegenerateInput on all-tied vectors, where the
    denominator vanishes.
    """
    ax, ay = _validated_pair(x, y)
    return _tau_from_signs(_pair_signs(ax), _pair_signs(ay))


def _batch_abs_tau(Y: np.ndarray, sx: np.ndarray, iu, jv) -> np.ndarray:
    """|tau_b(x, row)| for every row of Y, given x's pair signs."""
    sy = np.sign(Y[:, iu] - Y[:, jv]).astype(np.int8)
    prod = sx.astype(np.int16) * sy
    concordant = (prod > 0).sum(axis=1)
    discordant = (prod < 0).sum(axis=1)
    tied_x_only = ((sx == 0) & (sy != 0)).sum(axis=1)
    tied_y_only = ((sy == 0) & (sx != 0)).sum(axis=1)
    total = concordant + discordant
    denom = np.sqrt(
        (total + tied_x_only).astype(np.float64)
        * (total + tied_y_only).astype(np.float64)
    )
    return np.abs((concordant - discordant) / denom)


EXHAUSTIVE_MAX_N = 7


def permutation_pvalue(x, y, *, iterations: int = 10000, seed: int = 0) -> float:
    """Two-sided permutation p-value for tau_b, permuting y against fixed x.

    For n <= 7 every one of the n! permutations is enumerated and
    p = count(|tau_perm| >= |tau_obs|) / n!. Otherwise ``iterations``
    permutations are sampled with a seeded generator and the add-one-smoothed
    estimate p = (1 + count) / (1 + iterations) is returned. Either way the
    result lies in (0, 1].
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    ax, ay = _validated_pair(x, y)
    n = len(ax)
    iu, jv = np.triu_indices(n, 1)
    sx = np.sign(ax[iu] - ax[jv]).astype(np.int8)
    t_obs = abs(_tau_from_signs(sx, np.sign(ay[iu] - ay[jv]).astype(np.int8)))

    if n <= EXHAUSTIVE_MAX_N:
        perms = np.array(list(itertools.permutations(ay)), dtype=float)
        count = int((_batch_abs_tau(perms, sx, iu, jv) >= t_obs).sum())
        return count / math.factorial(n)

    rng = np.random.default_rng(seed)
    count = 0
    chunk = max(1, (1 << 22) // max(1, len(sx)))
    remaining = iterations
    while remaining > 0:
        size = min(chunk, remaining)
        perms = rng.permuted(np.tile(ay, (size, 1)), axis=1)
        count += int((_batch_abs_tau(perms, sx, iu, jv) >= t_obs).sum())
        remaining -= size
    return (1 + count) / (1 + iterations)


# --- Krippendorff alpha ------------------------------------------------------------


def krippendorff_alpha(
    table: AnnotationTable, level: AgreementLevel = AgreementLevel.NOMINAL
) -> float:
    """Chance-corrected agreement via the coincidence-matrix formulation.

    Units with fewer than two ratings are excluded; if none remain the value
    is undefined and InsufficientData is raised. alpha = 1 - D_o / D_e with
    the nominal (0/1) or ordinal (squared cumulative-frequency) distance.
    Unanimous data gives exactly 1.0.
    """
    multirated = [vals for vals in table.unit_ratings() if len(vals) >= 2]
    if not multirated:
        raise InsufficientData("no unit has two or more ratings")

    categories = sorted({v for vals in multirated for v in vals})
    index = {c: i for i, c in enumerate(categories)}
    k = len(categories)

    coincidence = np.zeros((k, k), dtype=float)
    for vals in multirated:
        counts = np.zeros(k, dtype=float)
        for v in vals:
            counts[index[v]] += 1.0
        coincidence += (np.outer(counts, counts) - np.diag(counts)) / (len(vals) - 1)

    marginals = coincidence.sum(axis=1)
    n = marginals.sum()

    if level is AgreementLevel.NOMINAL:
        distance_sq = 1.0 - np.eye(k)
    elif level is AgreementLevel.ORDINAL:
        cumulative = np.cumsum(marginals)
        idx = np.arange(k)
        lo = np.minimum.outer(idx, idx)
        hi = np.maximum.outer(idx, idx)
        between = cumulative[hi] - cumulative[lo] + marginals[lo]
        distance_sq = (between - (marginals[:, None] + marginals[None, :]) / 2.0) ** 2
    else:
        raise ValueError(f"unknown agreement level: {level!r}")

    observed = (coincidence * distance_sq).sum() / n
    expected = (np.outer(marginals, marginals) * distance_sq).sum() / (n * (n - 1))
    if expected == 0.0:
        return 1.0
    return 1.0 - observed / expected


# --- report assembly ------------------------------------------------------------


@dataclass(frozen=True)
class MetaEvalConfig:
    iterations: int = 10000
    seed: int = 0
    granularity: str = "auto"  # "auto" | "summary" | "system"
    min_systems_for_system_level: int = 3


def aggregate_system_level(matrix: ScoreMatrix) -> ScoreMatrix:
    """Collapse a summary-level matrix to per-system score means."""
    if matrix.granularity is not Granularity.SUMMARY_LEVEL:
        raise ValueError("input must be summary-level")
    by_system: dict[str, list[ScoreRow]] = {}
    for row in matrix.rows:
        by_system.setdefault(row.system_id, []).append(row)
    rows = tuple(
        ScoreRow(
            item_id="*",
            system_id=system_id,
            metric_score=sum(r.metric_score for r in group) / len(group),
            human_score=sum(r.human_score for r in group) / len(group),
        )
        for system_id, group in sorted(by_system.items())
    )
    return ScoreMatrix(rows=rows, granularity=Granularity.SYSTEM_LEVEL)


def _stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class CorrelationCell:
    label: str
    n: int
    granularity: Granularity
    tau: float | None = None
    p_value: float | None = None
    stars: str = ""
    unavailable: bool = False
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "granularity": self.granularity.value,
            "tau": self.tau,
            "p_value": self.p_value,
            "stars": self.stars,
            "unavailable": self.unavailable,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class CorrelationReport:
    cells: tuple[CorrelationCell, ...]
    config: MetaEvalConfig = field(default_factory=MetaEvalConfig)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))

    def __iter__(self):
        return iter(self.cells)

    def to_dict(self) -> dict:
        return {"cells": [c.to_dict() for c in self.cells]}


def _resolve_granularity(matrix: ScoreMatrix, cfg: MetaEvalConfig) -> ScoreMatrix:
    if matrix.granularity is Granularity.SYSTEM_LEVEL or cfg.granularity == "summary":
        return matrix
    if cfg.granularity == "system":
        return aggregate_system_level(matrix)
    if cfg.granularity == "auto":
        if len(matrix.system_ids()) >= cfg.min_systems_for_system_level:
            return aggregate_system_level(matrix)
        return matrix
    raise ValueError(f"unknown granularity policy: {cfg.granularity!r}")


def correlation_report(matrix, cfg: MetaEvalConfig | None = None) -> CorrelationReport:
    """Correlation table over one matrix or a {label: matrix} mapping.

    Each group yields one cell with tau_b, its permutation p-value, and
    significance stars (* p<0.05, ** p<0.01, *** p<0.001). Groups with
    degenerate inputs (for example all-tied human scores) are marked
    unavailable instead of failing the report.
    """
    cfg = cfg if cfg is not None else MetaEvalConfig()
    groups: list[tuple[str, ScoreMatrix]]
    if isinstance(matrix, ScoreMatrix):
        groups = [("all", matrix)]
    else:
        groups = list(matrix.items())

    cells = []
    for label, group in groups:
        resolved = _resolve_granularity(group, cfg)
        x = resolved.metric_scores()
        y = resolved.human_scores()
        try:
            tau = kendall_tau_b(x, y)
            p = permutation_pvalue(x, y, iterations=cfg.iterations, seed=cfg.seed)
        except DegenerateInput as exc:
            cells.append(
                CorrelationCell(
                    label=label,
                    n=len(resolved),
                    granularity=resolved.granularity,
                    unavailable=True,
                    reason=str(exc),
                )
            )
            continue
        cells.append(
            CorrelationCell(
                label=label,
                n=len(resolved),
                granularity=resolved.granularity,
                tau=tau,
                p_value=p,
                stars=_stars(p),
            )
        )
    return CorrelationReport(cells=tuple(cells), config=cfg)
