"""End-to-end conformal novelty detector.

Pipeline: partition nulls into a training block and a calibration block;
train a positive-unlabeled score function (label 0 = training nulls, label 1 =
calibration plus test); score calibration and test points; convert test scores
to conformal p-values against the calibration scores; reject with BH.

Ground truth rides along in :class:`DataSplit` for evaluation but is held in a
private field with a separate accessor, so the detection path cannot touch it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import InvalidInputError
from .learners import LabeledDataset, train_score_function
from .stats import (
    BHResult,
    PValueVector,
    benjamini_hochberg,
    conformal_pvalues,
)

__all__ = [
    "DataSplit",
    "DetectionResult",
    "DetectorConfig",
    "DetectorService",
    "ground_truth_mask",
    "build_pu_dataset",
    "detect_from_scores",
    "adadetect",
    "run_detector",
    "query_labels",
]


@dataclass(frozen=True)
class DataSplit:
    """Null training block, null calibration block, and the test block.

    ``ground_truth`` (True = non-null) is optional, evaluation-only, and
    deliberately not part of the fields detection code reads.
    """

    train_null: np.ndarray
    calibration_null: np.ndarray
    test: np.ndarray
    _ground_truth: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        for name in ("train_null", "calibration_null", "test"):
            block = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, block)
            if block.ndim != 2 or block.shape[0] == 0:
                raise InvalidInputError(f"{name} must be a non-empty 2-D matrix")
        d = self.train_null.shape[1]
        if self.calibration_null.shape[1] != d or self.test.shape[1] != d:
            raise InvalidInputError("all blocks must share the feature dimension")
        if self._ground_truth is not None:
            mask = np.asarray(self._ground_truth, dtype=bool)
            object.__setattr__(self, "_ground_truth", mask)
            if mask.shape != (self.test.shape[0],):
                raise InvalidInputError("ground truth mask must have one entry per test row")

    @property
    def k(self) -> int:
        return int(self.train_null.shape[0])

    @property
    def n(self) -> int:
        return self.k + int(self.calibration_null.shape[0])

    @property
    def m(self) -> int:
        return int(self.test.shape[0])

    @property
    def d(self) -> int:
        return int(self.train_null.shape[1])

    def with_test(self, new_test: np.ndarray) -> "DataSplit":
        """Same split with the test block replaced (ground truth preserved)."""
        new_test = np.asarray(new_test, dtype=np.float64)
        if new_test.shape != self.test.shape:
            raise InvalidInputError("replacement test block must keep the same shape")
        return replace(self, test=new_test)


def ground_truth_mask(split: DataSplit) -> np.ndarray:
    """Evaluation-side read of the non-null mask; detection code never calls this."""
    if split._ground_truth is None:
        raise InvalidInputError("split carries no ground truth")
    return split._ground_truth


@dataclass(frozen=True)
class DetectionResult:
    """Scores for the mixed block, conformal p-values, and the BH decision."""

    scores: np.ndarray
    n_calibration: int
    pvalues: PValueVector
    bh: BHResult
    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if not np.array_equal(labels == 1, self.bh.rejected):
            raise InvalidInputError("labels must mirror the BH rejection mask")

    @property
    def calibration_scores(self) -> np.ndarray:
        return self.scores[: self.n_calibration]

    @property
    def test_scores(self) -> np.ndarray:
        return self.scores[self.n_calibration :]

    @property
    def n_rejected(self) -> int:
        return self.bh.threshold_index


@dataclass(frozen=True)
class DetectorConfig:
    """Everything the user's detector needs besides the data."""

    learner_kind: str = "random_forest"
    hyper: object = None
    alpha: float = 0.1
    train_seed: int = 0
    comparator: str = ">"


def build_pu_dataset(split: DataSplit) -> LabeledDataset:
    """Label 0 = training nulls; label 1 = calibration plus test (the mixed block)."""
    features = np.concatenate([split.train_null, split.calibration_null, split.test])
    labels = np.concatenate(
        [
            np.zeros(split.k, dtype=np.int64),
            np.ones(split.n - split.k + split.m, dtype=np.int64),
        ]
    )
    return LabeledDataset(features=features, labels=labels)


def detect_from_scores(
    calibration_scores: np.ndarray,
    test_scores: np.ndarray,
    alpha: float,
    comparator: str = ">",
) -> DetectionResult:
    """Conformal p-values plus BH, given already-computed scores."""
    calibration_scores = np.asarray(calibration_scores, dtype=np.float64)
    test_scores = np.asarray(test_scores, dtype=np.float64)
    pvalues = conformal_pvalues(calibration_scores, test_scores, comparator=comparator)
    bh = benjamini_hochberg(pvalues, alpha)
    return DetectionResult(
        scores=np.concatenate([calibration_scores, test_scores]),
        n_calibration=int(calibration_scores.size),
        pvalues=pvalues,
        bh=bh,
        labels=bh.rejected.astype(np.int64),
    )


def adadetect(
    split: DataSplit,
    learner_kind: str,
    hyper=None,
    alpha: float = 0.1,
    seed: int = 0,
    comparator: str = ">",
) -> DetectionResult:
    """Run the full pipeline on a split and return scores, p-values, and labels."""
    model = train_score_function(build_pu_dataset(split), learner_kind, hyper, seed)
    calibration_scores = model.score_batch(split.calibration_null)
    test_scores = model.score_batch(split.test)
    return detect_from_scores(calibration_scores, test_scores, alpha, comparator)


def run_detector(split: DataSplit, config: DetectorConfig) -> DetectionResult:
    return adadetect(
        split,
        config.learner_kind,
        config.hyper,
        config.alpha,
        config.train_seed,
        config.comparator,
    )


def query_labels(split: DataSplit, config: DetectorConfig) -> np.ndarray:
    """The attacker-visible surface: run the detector once, return only labels."""
    return run_detector(split, config).labels.copy()


class DetectorService:
    """The user's detector bound to its data.

    ``query_labels`` is the only attacker-facing method; ``rerun`` is the
    user-side re-analysis on (possibly attacked) test data.
    """

    def __init__(self, split: DataSplit, config: DetectorConfig):
        self._split = split
        self._config = config
        self._benign: DetectionResult | None = None

    @property
    def config(self) -> DetectorConfig:
        return self._config

    def benign_result(self) -> DetectionResult:
        """The detection on the unattacked data (fit once, then cached)."""
        if self._benign is None:
            self._benign = run_detector(self._split, self._config)
        return self._benign

    def query_labels(self) -> np.ndarray:
        return self.benign_result().labels.copy()

    def rerun(self, attacked_test: np.ndarray) -> DetectionResult:
        return run_detector(self._split.with_test(attacked_test), self._config)
