"""Ordinal aggregation of a ranking matrix.

Treats the K x M ranking matrix as a rating scheme in which K surrogates
rate M components on the ordinal scale 1..M, and quantifies agreement
with four statistics: per-component mean rank, per-component ordinal
consensus C, Fleiss' kappa, and Kendall's coefficient of concordance W.

Convention used throughout: higher mean rank = more important.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .bootstrap import INDEX_ORDER, RankingMatrix
from .errors import InputError

RANK_CONVENTION = "higher mean rank = more important"

# Column sums switch to compensated summation past this many raters.
_FSUM_THRESHOLD = 10_000


def _column_sums(ranks: np.ndarray) -> np.ndarray:
    if ranks.shape[0] > _FSUM_THRESHOLD:
        return np.array([math.fsum(col) for col in ranks.T])
    return ranks.sum(axis=0)


def _as_index_order(matrix: RankingMatrix) -> np.ndarray:
    """Integer (index-order) version of a ranking matrix.

    Re-ranking rank values row-wise preserves each row's ordering, so this
    equals index-order ranking of the original coefficients.
    """
    if matrix.tie_policy == INDEX_ORDER:
        return matrix.ranks.astype(np.int64)
    return rankdata(matrix.ranks, method="ordinal", axis=1).astype(np.int64)


@dataclass(frozen=True)
class ConsensusReport:
    """All four consensus statistics for one ranking matrix."""

    mean_ranks: np.ndarray
    consensus: np.ndarray
    fleiss_kappa: float
    kendall_w: float
    k_surrogates: int
    m_components: int
    rank_convention: str = field(default=RANK_CONVENTION)

    def to_json_dict(self) -> dict:
        return {
            "mean_ranks": [float(v) for v in self.mean_ranks],
            "consensus": [float(v) for v in self.consensus],
            "fleiss_kappa": float(self.fleiss_kappa),
            "kendall_w": float(self.kendall_w),
            "k": self.k_surrogates,
            "m": self.m_components,
            "rank_convention": self.rank_convention,
        }


def mean_ranks(matrix: RankingMatrix) -> np.ndarray:
    """Column means of the ranking matrix (r-bar per component)."""
    if matrix.k < 1:
        raise InputError("mean ranks need at least one rank row")
    return _column_sums(matrix.ranks) / matrix.k


def ordinal_consensus(matrix: RankingMatrix, j: int) -> float:
    """Agreement score in [0, 1] for the ranks given to component j.

    The K ranks of column j (integer, index-order tie-broken) form a
    frequency distribution p over the scale 1..M with mean mu; the score is

        C = 1 + sum_v p_v * log2(1 - |v - mu| / (M - 1))

    1 means unanimity, values near 0.5 a spread-out distribution, and 0
    full polarisation between the scale ends. Clamped to [0, 1] against
    floating-point drift.
    """
    m = matrix.m
    if not 0 <= j < m:
        raise InputError(f"component {j} out of range for M={m}")
    if m == 1:
        return 1.0
    column = _as_index_order(matrix)[:, j]
    counts = np.bincount(column, minlength=m + 1)[1:]
    p = counts / counts.sum()
    mu = float(column.mean())
    support = np.flatnonzero(p)
    spread = 1.0 - np.abs(support + 1.0 - mu) / (m - 1)
    # The two-sided extreme that would zero an occupied term cannot occur
    # for a distribution and its own mean; the floor only guards rounding.
    score = 1.0 + float(p[support] @ np.log2(np.maximum(spread, 1e-300)))
    return min(1.0, max(0.0, score))


def fleiss_kappa(matrix: RankingMatrix) -> float:
    """Chance-corrected categorical agreement of the rank assignments.

    Components are the subjects, surrogates the raters, and the M rank
    values the categories; consumes the integer index-order matrix.
    """
    k, m = matrix.k, matrix.m
    if k < 2 or m < 2:
        raise InputError("Fleiss' kappa needs K >= 2 and M >= 2")
    ranks = _as_index_order(matrix)
    table = np.zeros((m, m))  # subjects x categories
    for j in range(m):
        table[j] = np.bincount(ranks[:, j], minlength=m + 1)[1:]
    p_cat = table.sum(axis=0) / (m * k)
    p_subject = ((table**2).sum(axis=1) - k) / (k * (k - 1))
    # fsum keeps these reductions independent of subject/category order, so
    # kappa is exactly invariant under component permutation.
    p_mean = math.fsum(p_subject) / m
    p_expected = math.fsum(p_cat**2)
    if 1.0 - p_expected < 1e-12:
        if p_mean > 1.0 - 1e-12:
            return 1.0
        raise InputError(
            "degenerate rank distribution: chance agreement is 1"
        )
    return (p_mean - p_expected) / (1.0 - p_expected)


def kendall_w(matrix: RankingMatrix) -> float:
    """Kendall's coefficient of concordance with tie correction.

    Consumes the average-rank matrix. When every component is tied in
    every row the statistic is undefined; it is reported as 0 with a
    warning.
    """
    k, m = matrix.k, matrix.m
    if k < 2 or m < 2:
        raise InputError("Kendall's W needs K >= 2 and M >= 2")
    col = _column_sums(matrix.ranks)
    # fsum: the deviation sum must not depend on component order.
    s = math.fsum((col - k * (m + 1) / 2.0) ** 2)
    ties = 0.0
    for row in matrix.ranks:
        _, counts = np.unique(row, return_counts=True)
        ties += float((counts**3 - counts).sum())
    denom = k * k * (m**3 - m) - k * ties
    if denom <= 0:
        warnings.warn(
            "all components tied in every ranking: W undefined, reporting 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0
    return min(1.0, max(0.0, 12.0 * s / denom))


def build_report(matrix: RankingMatrix) -> ConsensusReport:
    """Assemble all four statistics for one (average-rank) ranking matrix.

    Mean ranks and W are computed on the matrix as given; kappa and the
    per-component consensus consume its integer index-order version.
    """
    if matrix.k < 2 or matrix.m < 2:
        raise InputError("consensus reports need K >= 2 and M >= 2")
    return ConsensusReport(
        mean_ranks=mean_ranks(matrix),
        consensus=np.array(
            [ordinal_consensus(matrix, j) for j in range(matrix.m)]
        ),
        fleiss_kappa=fleiss_kappa(matrix),
        kendall_w=kendall_w(matrix),
        k_surrogates=matrix.k,
        m_components=matrix.m,
    )
