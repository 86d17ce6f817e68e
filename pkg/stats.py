"""
Run summaries and the paired Wilcoxon signed-rank comparison.

Verdicts use the table notation: ``+`` when the second algorithm (Clu-DE) is
significantly better (lower), ``-`` when the first (DE) is, ``=`` otherwise.
Zero differences are dropped before ranking; tied magnitudes get average
ranks. For n <= 25 non-zero differences the decision uses exact critical
values of the signed-rank distribution; above that, the normal approximation
with tie and continuity corrections.
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.stats import norm, rankdata

from core import ConfigurationError, StatisticsError

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
EXACT_MAX_N = 25

# Two-sided alpha = 0.05: reject when min(W+, W-) <= value. No entry below
# n = 6, where no outcome is significant.
CRITICAL_VALUES_05 = {
    6: 0,
    7: 2,
    8: 3,
    9: 5,
    10: 8,
    11: 10,
    12: 13,
    13: 17,
    14: 21,
    15: 25,
    16: 29,
    17: 34,
    18: 40,
    19: 46,
    20: 52,
    21: 58,
    22: 65,
    23: 73,
    24: 81,
    25: 89,
}


class Verdict(enum.Enum):
    PLUS = "+"
    MINUS = "-"
    EQUAL = "="

    def swapped(self) -> "Verdict":
        if self is Verdict.PLUS:
            return Verdict.MINUS
        if self is Verdict.MINUS:
            return Verdict.PLUS
        return self


@dataclass(frozen=True)
class RunSummary:
    function_id: str
    algorithm: str
    dimension: int
    final_values: tuple
    mean: float
    stddev: float

    @classmethod
    def from_values(
        cls, function_id: str, algorithm: str, dimension: int, values
    ) -> "RunSummary":
        values = tuple(float(v) for v in values)
        mean, stddev = summarize(values)
        return cls(function_id, algorithm, dimension, values, mean, stddev)

    @property
    def runs(self) -> int:
        return len(self.final_values)


@dataclass(frozen=True)
class ComparisonVerdict:
    """Outcome of one paired test.

    ``threshold_or_p`` is the exact critical value when ``method`` is
    ``"exact"`` (NaN when n is too small for any rejection) and the two-sided
    p-value when ``method`` is ``"normal"``.
    """

    function_id: str
    verdict: Verdict
    statistic: float
    threshold_or_p: float
    method: str
    n: int
    w_plus: float
    w_minus: float


def summarize(values) -> tuple:
    """Arithmetic mean and sample standard deviation (n - 1 denominator)."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise StatisticsError(
            f"a summary needs at least 2 values, got {values.size}"
        )
    return float(np.mean(values)), float(np.std(values, ddof=1))


@lru_cache(maxsize=None)
def signed_rank_counts(n: int) -> tuple:
    """Number of sign patterns giving W+ = w, for w = 0..n(n+1)/2.

    Built by adding rank r = 1..n to a subset or not:
    ``count_r(w) = count_{r-1}(w) + count_{r-1}(w - r)``.
    """
    total = n * (n + 1) // 2
    counts = [1] + [0] * total
    for rank in range(1, n + 1):
        for w in range(total, rank - 1, -1):
            counts[w] += counts[w - rank]
    return tuple(counts)


@lru_cache(maxsize=None)
def exact_critical_value(n: int, alpha: float = DEFAULT_ALPHA):
    """Largest c with P(W <= c) <= alpha / 2 under H0, or None if none exists."""
    level = Fraction(str(alpha)) / 2
    patterns = 2**n
    cumulative = 0
    critical = None
    for w, count in enumerate(signed_rank_counts(n)):
        cumulative += count
        if Fraction(cumulative, patterns) > level:
            break
        critical = w
    return critical


def critical_value(n: int, alpha: float = DEFAULT_ALPHA):
    """
    Two-sided critical value of the smaller signed-rank sum

    Args:
        n (int): Number of non-zero differences
        alpha (float): Significance level

    Returns:
        int or None: Largest W with P(W <= w) <= alpha / 2, or None when even
        W = 0 is not significant at this n
    """
    if alpha == DEFAULT_ALPHA and n in CRITICAL_VALUES_05:
        return CRITICAL_VALUES_05[n]
    if alpha == DEFAULT_ALPHA and n < min(CRITICAL_VALUES_05):
        return None
    return exact_critical_value(n, alpha)


def _normal_p_value(statistic: float, n: int, ranks: np.ndarray) -> float:
    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    variance -= np.sum(tie_sizes**3 - tie_sizes) / 48.0
    if variance <= 0.0:
        return 1.0
    # statistic is min(W+, W-) <= mean, so the correction moves it up
    z = (statistic - mean + 0.5) / np.sqrt(variance)
    return float(min(1.0, 2.0 * norm.cdf(z)))


def wilcoxon_signed_rank(
    a,
    b,
    alpha: float = DEFAULT_ALPHA,
    function_id: str = "",
    method: str = "auto",
) -> ComparisonVerdict:
    """Paired two-sided test on ``d = a - b``.

    Called as ``wilcoxon_signed_rank(de_values, clu_de_values)``, a ``+``
    verdict means the second sample is significantly lower.
    """
    if method not in ("auto", "exact", "normal"):
        raise ConfigurationError(f"unknown method {method!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise StatisticsError(
            f"paired samples must be 1-D and equally long, got {a.shape} and {b.shape}"
        )
    differences = a - b
    differences = differences[differences != 0.0]
    n = int(differences.size)
    if n == 0:
        return ComparisonVerdict(
            function_id, Verdict.EQUAL, 0.0, float("nan"), "exact", 0, 0.0, 0.0
        )

    ranks = rankdata(np.abs(differences))
    w_plus = float(np.sum(ranks[differences > 0]))
    w_minus = float(np.sum(ranks[differences < 0]))
    statistic = min(w_plus, w_minus)

    use_exact = method == "exact" or (method == "auto" and n <= EXACT_MAX_N)
    if use_exact:
        critical = critical_value(n, alpha)
        significant = critical is not None and statistic <= critical
        threshold = float("nan") if critical is None else float(critical)
        used = "exact"
    else:
        threshold = _normal_p_value(statistic, n, ranks)
        significant = threshold < alpha
        used = "normal"

    if not significant or w_plus == w_minus:
        verdict = Verdict.EQUAL
    elif w_plus > w_minus:
        verdict = Verdict.PLUS
    else:
        verdict = Verdict.MINUS
    logger.debug(
        "wilcoxon %s: n=%d W+=%.1f W-=%.1f -> %s",
        function_id,
        n,
        w_plus,
        w_minus,
        verdict.value,
    )
    return ComparisonVerdict(
        function_id, verdict, statistic, threshold, used, n, w_plus, w_minus
    )


def wtl_tally(verdicts) -> tuple:
    """(wins, ties, losses) counted from the second algorithm's point of view."""
    counts = Counter(v.verdict for v in verdicts)
    return counts[Verdict.PLUS], counts[Verdict.EQUAL], counts[Verdict.MINUS]
