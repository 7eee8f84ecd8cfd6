"""Distribution-free inference core: conformal p-values, the Benjamini-Hochberg
step-up procedure, false-discovery metrics, and the attacked-FDR upper-bound
estimator.

Conformal p-values are kept as exact rationals (an integer rank over a common
denominator) so that rank-uniformity checks and BH threshold comparisons are
free of float-tie artifacts. BH accepts either a :class:`PValueVector` or any
sequence of floats; all threshold comparisons are done in exact rational
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "PValueVector",
    "BHResult",
    "ConfusionCounts",
    "conformal_pvalue",
    "conformal_pvalues",
    "benjamini_hochberg",
    "fdp_and_power",
    "confusion_counts",
    "estimate_fdr_upper_bound",
]


@dataclass(frozen=True)
class PValueVector:
    """Discrete conformal p-values stored as integer ranks over a common
    denominator: value j is ``ranks[j] / denominator``.

    Ranks live in ``{1, ..., denominator}``, so every value is in (0, 1] and
    is an exact multiple of ``1/denominator``.
    """

    ranks: np.ndarray
    denominator: int

    def __post_init__(self) -> None:
        ranks = np.asarray(self.ranks, dtype=np.int64)
        object.__setattr__(self, "ranks", ranks)
        if self.denominator < 1:
            raise InvalidInputError("denominator must be a positive integer")
        if ranks.ndim != 1:
            raise InvalidInputError("ranks must be one-dimensional")
        if ranks.size and (ranks.min() < 1 or ranks.max() > self.denominator):
            raise InvalidInputError(
                f"ranks must lie in [1, {self.denominator}], got "
                f"[{ranks.min()}, {ranks.max()}]"
            )

    def __len__(self) -> int:
        return int(self.ranks.size)

    def to_floats(self) -> np.ndarray:
        return self.ranks.astype(np.float64) / float(self.denominator)

    def as_fractions(self) -> list[Fraction]:
        return [Fraction(int(r), self.denominator) for r in self.ranks]


@dataclass(frozen=True)
class BHResult:
    """Outcome of the BH step-up procedure at level ``alpha``.

    ``threshold_index`` is the step-up index (equivalently, the number of
    rejections) and ``rejected`` marks the rejected hypotheses in input order.
    """

    threshold_index: int
    rejected: np.ndarray
    alpha: float

    def __post_init__(self) -> None:
        rejected = np.asarray(self.rejected, dtype=bool)
        object.__setattr__(self, "rejected", rejected)
        if int(rejected.sum()) != self.threshold_index:
            raise InvalidInputError(
                "threshold_index must equal the number of rejections"
            )

    @property
    def n_rejected(self) -> int:
        return self.threshold_index


@dataclass(frozen=True)
class ConfusionCounts:
    """Rejection bookkeeping for one replicate: ``v`` false discoveries out of
    ``r`` rejections against ``m0`` nulls and ``m1`` non-nulls."""

    v: int
    r: int
    m0: int
    m1: int

    def __post_init__(self) -> None:
        ok = (
            0 <= self.v <= self.r <= self.m0 + self.m1
            and self.v <= self.m0
            and self.r - self.v <= self.m1
        )
        if not ok:
            raise InvalidInputError(
                f"inconsistent counts v={self.v} r={self.r} m0={self.m0} m1={self.m1}"
            )


def conformal_pvalue(
    calibration_scores: Sequence[float] | np.ndarray,
    test_score: float,
    comparator: str = ">",
) -> Fraction:
    """Rank-based p-value of ``test_score`` against the calibration scores.

    Returns ``(1 + #{i : s_i > t}) / (n_cal + 1)`` with the strict comparator
    (the default); with ``comparator=">="`` ties on the calibration side count
    against the test point, which is the convention an attacker replicating
    the pipeline locally uses.
    """
    cal = np.asarray(calibration_scores, dtype=np.float64)
    if cal.size == 0:
        raise InvalidInputError("calibration_scores must be non-empty")
    if comparator == ">":
        exceed = int(np.count_nonzero(cal > test_score))
    elif comparator in (">=", "≥"):
        exceed = int(np.count_nonzero(cal >= test_score))
    else:
        raise InvalidInputError(f"unknown comparator {comparator!r}")
    return Fraction(1 + exceed, cal.size + 1)


def conformal_pvalues(
    calibration_scores: np.ndarray,
    test_scores: np.ndarray,
    comparator: str = ">",
) -> PValueVector:
    """Vectorized :func:`conformal_pvalue` over a batch of test scores."""
    cal = np.asarray(calibration_scores, dtype=np.float64)
    test = np.asarray(test_scores, dtype=np.float64)
    if cal.size == 0:
        raise InvalidInputError("calibration_scores must be non-empty")
    order = np.sort(cal)
    if comparator == ">":
        # #{cal > t} = n_cal - #{cal <= t}
        exceed = cal.size - np.searchsorted(order, test, side="right")
    elif comparator in (">=", "≥"):
        exceed = cal.size - np.searchsorted(order, test, side="left")
    else:
        raise InvalidInputError(f"unknown comparator {comparator!r}")
    return PValueVector(ranks=1 + exceed.astype(np.int64), denominator=cal.size + 1)


def _exact_fractions(pvalues: PValueVector | Iterable[float]) -> list[Fraction]:
    if isinstance(pvalues, PValueVector):
        return pvalues.as_fractions()
    fracs = [Fraction(float(p)) for p in pvalues]
    if any(p <= 0 or p > 1 for p in fracs):
        raise InvalidInputError("p-values must lie in (0, 1]")
    return fracs


def benjamini_hochberg(
    pvalues: PValueVector | Sequence[float], alpha: float
) -> BHResult:
    """BH step-up procedure at level ``alpha``.

    Sorts the p-values ascending (stable, so equal values keep input order),
    finds the largest index i with ``p_(i) <= alpha * i / m``, and rejects
    every hypothesis at or below the resulting threshold. Comparisons are
    exact rational arithmetic, so grid-valued p-values behave identically to
    an exhaustive threshold search.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must be in (0, 1), got {alpha}")
    fracs = _exact_fractions(pvalues)
    m = len(fracs)
    if m == 0:
        return BHResult(threshold_index=0, rejected=np.zeros(0, dtype=bool), alpha=alpha)
    alpha_frac = Fraction(float(alpha))
    order = sorted(range(m), key=lambda j: fracs[j])
    tau = 0
    for i in range(m, 0, -1):
        if fracs[order[i - 1]] <= alpha_frac * i / m:
            tau = i
            break
    rejected = np.zeros(m, dtype=bool)
    if tau > 0:
        cutoff = alpha_frac * tau / m
        for j in range(m):
            rejected[j] = fracs[j] <= cutoff
    return BHResult(threshold_index=tau, rejected=rejected, alpha=float(alpha))


def fdp_and_power(counts: ConfusionCounts) -> tuple[float, float]:
    """False discovery proportion ``v / max(r, 1)`` and realized power
    ``(r - v) / max(m1, 1)`` for one replicate."""
    fdp = counts.v / max(counts.r, 1)
    power = (counts.r - counts.v) / max(counts.m1, 1)
    return fdp, power


def confusion_counts(rejected: np.ndarray, is_novel: np.ndarray) -> ConfusionCounts:
    """Tally rejections against ground truth (``is_novel`` True = non-null)."""
    rejected = np.asarray(rejected, dtype=bool)
    is_novel = np.asarray(is_novel, dtype=bool)
    if rejected.shape != is_novel.shape:
        raise InvalidInputError("rejected and is_novel must have equal length")
    v = int(np.count_nonzero(rejected & ~is_novel))
    r = int(np.count_nonzero(rejected))
    m1 = int(np.count_nonzero(is_novel))
    return ConfusionCounts(v=v, r=r, m0=is_novel.size - m1, m1=m1)


def estimate_fdr_upper_bound(
    alpha: float,
    attack_sizes: Sequence[int],
    rejection_counts: Sequence[int],
) -> float:
    """Empirical post-attack FDR upper bound
    ``alpha + mean_i(attack_sizes[i] / max(rejection_counts[i], 1))``.

    With a fixed attack size this is ``alpha + m_a * mean(1 / (R~ v 1))``;
    per-replicate attack sizes cover the random-size variant.
    """
    sizes = list(attack_sizes)
    rejections = list(rejection_counts)
    if len(sizes) != len(rejections):
        raise InvalidInputError(
            f"length mismatch: {len(sizes)} attack sizes vs "
            f"{len(rejections)} rejection counts"
        )
    if not sizes:
        raise InvalidInputError("need at least one replicate")
    ratios = [s / max(int(r), 1) for s, r in zip(sizes, rejections)]
    return float(alpha) + float(np.mean(ratios))
